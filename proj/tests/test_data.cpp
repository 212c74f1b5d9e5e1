#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hierfed/data/dataset.hpp"
#include "hierfed/data/partition.hpp"
#include "hierfed/errors.hpp"

using namespace hierfed;
using namespace hierfed::data;

namespace {

const char* kEvents = "student_id,course_id,kind,video_id,response,forum_action,timestamp\n";
const char* kStudents = "student_id,course_id,gender,continent,birth_year,outcome\n";

Dataset from_csv(const std::string& events, const std::string& students) {
    std::istringstream ev(events), st(students);
    return ingest_streams(ev, st);
}

// n students per course, with every third one withholding gender.
Dataset synthetic(int courses, int per_course) {
    std::vector<StudentRecord> students;
    std::vector<EventRecord> events;
    for (int c = 0; c < courses; ++c) {
        for (int i = 0; i < per_course; ++i) {
            StudentRecord s;
            s.student_id = "s" + std::to_string(i);
            s.course_id = "C" + std::to_string(c);
            if (i % 3 != 0) s.gender = i % 2 ? Gender::M : Gender::F;
            s.birth_year = 1970 + i % 30;
            s.outcome = i % 2;
            students.push_back(s);
            events.push_back({s.student_id, s.course_id, EventKind::Video, "v1", std::nullopt,
                              std::nullopt, i});
        }
    }
    return assemble(std::move(events), std::move(students));
}

}  // namespace

TEST_CASE("csv ingest sorts events stably") {
    const std::string ev = std::string(kEvents) +
                           "u1,A,video,v1,,,30\n"
                           "u1,A,forum,,,forum_view,10\n"
                           "u1,A,quiz_response,v1,1,,30\n"
                           "u2,A,video,v2,,,5\n";
    const std::string st = std::string(kStudents) + "u2,A,F,EU,1990,0\nu1,A,M,,,1\n";
    const auto ds = from_csv(ev, st);
    REQUIRE(ds.size() == 2);
    CHECK(ds.students[0].info.student_id == "u1");
    const auto& e = ds.students[0].events;
    REQUIRE(e.size() == 3);
    CHECK(e[0].kind == EventKind::Forum);
    CHECK(e[1].kind == EventKind::Video);  // input order kept on equal timestamps
    CHECK(e[2].kind == EventKind::QuizResponse);
    CHECK(ds.students[1].info.continent == Continent::EU);
    CHECK(ds.warnings.empty());
}

TEST_CASE("students without events are kept") {
    const auto ds = from_csv(kEvents, std::string(kStudents) + "a,X,,,,0\nb,X,,,,1\n");
    CHECK(ds.size() == 2);
    CHECK(ds.students[0].events.empty());
}

TEST_CASE("malformed rows report line numbers") {
    auto expect_line = [](const std::string& ev, const std::string& st, const std::string& what) {
        try {
            from_csv(ev, st);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(what) != std::string::npos);
        }
    };
    const std::string st = std::string(kStudents) + "u1,A,M,,,1\n";
    expect_line(std::string(kEvents) + "u1,A,video,v1,,,1\nu1,A,video,,,,2\n", st, "line 3");
    expect_line(std::string(kEvents) + "u1,A,quiz_response,v1,2,,1\n", st, "line 2");
    expect_line(std::string(kEvents) + "u1,A,forum,v1,,forum_view,1\n", st, "line 2");
    expect_line(std::string(kEvents) + "u1,A,video,v1,,,-4\n", st, "line 2");
    expect_line(std::string(kEvents) + "u1,A,teleport,,,,1\n", st, "line 2");
    expect_line(std::string(kEvents) + "u1,A,video,v1,,\n", st, "line 2");
    expect_line(kEvents, std::string(kStudents) + "u1,A,X,,,1\n", "line 2");
    expect_line(kEvents, std::string(kStudents) + "u1,A,,,,maybe\n", "line 2");
    expect_line("bad header\n", st, "header");
    CHECK_THROWS_AS(from_csv(std::string(kEvents) + "ghost,A,video,v1,,,1\n", st), DataError);
    CHECK_THROWS_AS(from_csv(kEvents, std::string(kStudents) + "u1,A,,,,1\nu1,A,,,,0\n"),
                    DataError);
}

TEST_CASE("continents and country codes") {
    CHECK(parse_continent("EU") == Continent::EU);
    CHECK(parse_continent("SA") == Continent::SA);  // continent code wins over Saudi Arabia
    CHECK(parse_continent("DE") == Continent::EU);
    CHECK(parse_continent("BR") == Continent::SA);
    CHECK(parse_continent("JP") == Continent::AS);
    CHECK(parse_continent("NG") == Continent::AF);
    CHECK(parse_continent("US") == Continent::NA);
    CHECK_THROWS_AS(parse_continent("AU"), DataError);
    CHECK_THROWS_AS(parse_continent("AQ"), DataError);
    CHECK_THROWS_AS(parse_continent("ZZ"), DataError);
}

TEST_CASE("duplicate quiz responses keep the first") {
    const std::string ev = std::string(kEvents) +
                           "u1,A,quiz_response,v1,0,,1\n"
                           "u1,A,quiz_response,v1,1,,2\n";
    const auto ds = from_csv(ev, std::string(kStudents) + "u1,A,,,,1\n");
    REQUIRE(ds.students[0].events.size() == 1);
    CHECK(ds.students[0].events[0].response == 0);
    CHECK(ds.warnings.size() == 1);
}

TEST_CASE("jsonl ingest matches csv") {
    const std::string ev_csv = std::string(kEvents) +
                               "u1,A,video,v1,,,3\n"
                               "u1,A,quiz_response,v1,1,,4\n"
                               "u1,A,forum,,,forum_post,5\n";
    const std::string st_csv = std::string(kStudents) + "u1,A,F,AS,1979,1\n";
    const std::string ev_json =
        R"({"student_id":"u1","course_id":"A","kind":"video","video_id":"v1","timestamp":3})"
        "\n"
        R"({"student_id":"u1","course_id":"A","kind":"quiz_response","video_id":"v1","response":1,"timestamp":4})"
        "\n"
        R"({"student_id":"u1","course_id":"A","kind":"forum","forum_action":"forum_post","video_id":null,"timestamp":5})"
        "\n";
    const std::string st_json =
        R"({"student_id":"u1","course_id":"A","gender":"F","continent":"AS","birth_year":1979,"outcome":1})"
        "\n";
    std::istringstream ej(ev_json), sj(st_json);
    const auto a = ingest_streams(ej, sj, true, true);
    CHECK(a.same_content(from_csv(ev_csv, st_csv)));
}

TEST_CASE("export then ingest round-trips") {
    const auto ds = synthetic(2, 9);
    const auto dir = std::filesystem::temp_directory_path() / "hierfed_test_data";
    std::filesystem::create_directories(dir);
    export_csv(ds, dir / "events.csv", dir / "students.csv");
    const auto back = ingest(dir / "events.csv", dir / "students.csv");
    CHECK(back.same_content(ds));
    CHECK(back.content_hash() == ds.content_hash());
    std::filesystem::remove_all(dir);
}

TEST_CASE("folds for a 100-student course") {
    const auto ds = synthetic(1, 100);
    const auto folds = make_folds(ds, 42);
    REQUIRE(folds.size() == 5);
    std::set<int> tested;
    for (const auto& f : folds) {
        CHECK(f.test[0].size() == 20);
        CHECK(f.train[0].size() == 64);
        CHECK(f.validation[0].size() == 16);
        std::set<int> tr(f.train[0].begin(), f.train[0].end());
        for (int id : f.test[0]) {
            CHECK(tr.count(id) == 0);
            CHECK(tested.insert(id).second);  // test sets pairwise disjoint
        }
        for (int id : f.validation[0]) CHECK(tr.count(id) == 0);
    }
    CHECK(tested.size() == 100);

    const auto again = make_folds(ds, 42);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(again[i].test == folds[i].test);
        CHECK(again[i].validation == folds[i].validation);
    }
    CHECK(make_folds(ds, 43)[0].test != folds[0].test);
    CHECK_THROWS_AS(make_folds(synthetic(1, 4), 1), ConfigError);
}

TEST_CASE("demographic grouping") {
    const auto ds = synthetic(2, 12);
    std::vector<int> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

    const auto g = group_by_demographic(ds, all, Demographic::Gender, false);
    CHECK(g.size() == 4);  // M and F in each of two courses
    std::size_t covered = 0;
    for (const auto& [k, ids] : g) {
        CHECK(k.subgroup != kSubgroupUnspecified);
        covered += ids.size();
    }
    CHECK(covered == 16);  // a third of 24 withheld gender

    const auto gu = group_by_demographic(ds, all, Demographic::Gender, true);
    CHECK(gu.size() == g.size() + 2);  // one extra subgroup per course
    std::set<int> seen;
    for (const auto& [_, ids] : gu) {
        for (int id : ids) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == ds.size());

    const auto none = group_by_demographic(ds, all, Demographic::None, false);
    CHECK(none.size() == 2);
    CHECK(none.begin()->first.subgroup == kSubgroupAll);

    CHECK(birth_year_bucket(1979) == 0);
    CHECK(birth_year_bucket(1980) == 1);
    CHECK(birth_year_bucket(1989) == 1);
    CHECK(birth_year_bucket(1990) == 2);
    CHECK(subgroup_label(Demographic::BirthYear, birth_year_bucket(1980)) == "80~90");
}

TEST_CASE("stratified batches") {
    std::vector<std::vector<int>> groups = {{0, 1, 2, 3, 4, 5}, {10, 11, 12, 13, 14}, {20, 21, 22, 23, 24, 25, 26}};
    Rng rng(1);
    CHECK(stratified_batch(groups, 4, rng).size() == 12);
    groups[1] = {10, 11};
    Rng a(5), b(5);
    const auto ba = stratified_batch(groups, 4, a);
    CHECK(ba.size() == 10);
    CHECK(ba == stratified_batch(groups, 4, b));
    CHECK(std::is_sorted(ba.begin(), ba.end()));
    CHECK_THROWS_AS(stratified_batch({{}, {}}, 4, rng), DomainError);
    CHECK_THROWS_AS(stratified_batch(groups, 0, rng), DomainError);
}
