#include "hierfed/data/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "hierfed/errors.hpp"
#include "hierfed/util/rng.hpp"

namespace hierfed::data {

namespace {

constexpr const char* kEventsHeader =
    "student_id,course_id,kind,video_id,response,forum_action,timestamp";
constexpr const char* kStudentsHeader =
    "student_id,course_id,gender,continent,birth_year,outcome";

using Row = std::vector<std::string>;

[[noreturn]] void fail(const std::string& file, std::size_t line, const std::string& msg) {
    throw DataError(file + " line " + std::to_string(line) + ": " + msg);
}

// Minimal CSV field splitter: commas, optional double quotes with "" escapes.
Row split_csv(const std::string& line) {
    Row out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += ch;
        }
    }
    out.push_back(std::move(field));
    return out;
}

void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<std::int64_t> parse_int(const std::string& s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

// Reads either CSV (with the exact header) or JSON-Lines into string rows in
// header column order. Missing JSON fields and nulls become "".
std::vector<std::pair<std::size_t, Row>> read_rows(std::istream& in, bool jsonl,
                                                   const std::string& header,
                                                   const std::string& file) {
    const Row columns = split_csv(header);
    std::vector<std::pair<std::size_t, Row>> rows;
    std::string line;
    std::size_t lineno = 0;
    if (!jsonl) {
        if (!std::getline(in, line)) fail(file, 1, "missing header");
        ++lineno;
        strip_cr(line);
        if (line != header) fail(file, 1, "expected header '" + header + "'");
    }
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (is_blank(line)) continue;
        if (!jsonl) {
            Row r = split_csv(line);
            if (r.size() != columns.size()) {
                fail(file, lineno, "expected " + std::to_string(columns.size()) + " fields, got " +
                                       std::to_string(r.size()));
            }
            rows.emplace_back(lineno, std::move(r));
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(file, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail(file, lineno, "expected a JSON object");
        Row r;
        for (const auto& col : columns) {
            auto it = j.find(col);
            if (it == j.end() || it->is_null()) {
                r.emplace_back();
            } else if (it->is_string()) {
                r.push_back(it->get<std::string>());
            } else if (it->is_number_integer()) {
                r.push_back(std::to_string(it->get<std::int64_t>()));
            } else {
                fail(file, lineno, "field '" + col + "' must be a string or integer");
            }
        }
        rows.emplace_back(lineno, std::move(r));
    }
    return rows;
}

bool looks_like_jsonl(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".jsonl" || ext == ".json") return true;
    std::ifstream in(p);
    char c = 0;
    while (in.get(c)) {
        if (!std::isspace(static_cast<unsigned char>(c))) return c == '{';
    }
    return false;
}

EventRecord parse_event(const Row& r, std::size_t line, const std::string& file) {
    EventRecord e;
    e.student_id = r[0];
    e.course_id = r[1];
    if (e.student_id.empty()) fail(file, line, "empty student_id");
    if (e.course_id.empty()) fail(file, line, "empty course_id");
    const std::string& kind = r[2];
    const bool has_video = !r[3].empty(), has_resp = !r[4].empty(), has_forum = !r[5].empty();
    if (kind == "video") {
        e.kind = EventKind::Video;
        if (!has_video) fail(file, line, "video event without video_id");
        if (has_resp || has_forum) fail(file, line, "video event carries response/forum fields");
    } else if (kind == "quiz_response") {
        e.kind = EventKind::QuizResponse;
        if (!has_video || !has_resp) fail(file, line, "quiz_response needs video_id and response");
        if (has_forum) fail(file, line, "quiz_response carries forum_action");
    } else if (kind == "forum") {
        e.kind = EventKind::Forum;
        if (!has_forum) fail(file, line, "forum event without forum_action");
        if (has_video || has_resp) fail(file, line, "forum event carries video/response fields");
    } else {
        fail(file, line, "unknown event kind '" + kind + "'");
    }
    if (has_video) e.video_id = r[3];
    if (has_resp) {
        if (r[4] != "0" && r[4] != "1") fail(file, line, "response must be 0 or 1");
        e.response = r[4] == "1" ? 1 : 0;
    }
    if (has_forum) {
        e.forum_action = parse_forum_action(r[5]);
        if (!e.forum_action) fail(file, line, "unknown forum_action '" + r[5] + "'");
    }
    auto ts = parse_int(r[6]);
    if (!ts || *ts < 0) fail(file, line, "timestamp must be a nonnegative integer");
    e.timestamp = *ts;
    return e;
}

StudentRecord parse_student(const Row& r, std::size_t line, const std::string& file) {
    StudentRecord s;
    s.student_id = r[0];
    s.course_id = r[1];
    if (s.student_id.empty()) fail(file, line, "empty student_id");
    if (s.course_id.empty()) fail(file, line, "empty course_id");
    if (!r[2].empty()) {
        if (r[2] == "M") {
            s.gender = Gender::M;
        } else if (r[2] == "F") {
            s.gender = Gender::F;
        } else {
            fail(file, line, "gender must be M, F or empty");
        }
    }
    if (!r[3].empty()) {
        try {
            s.continent = parse_continent(r[3]);
        } catch (const DataError& e) {
            fail(file, line, e.what());
        }
    }
    if (!r[4].empty()) {
        auto y = parse_int(r[4]);
        if (!y) fail(file, line, "birth_year must be an integer");
        s.birth_year = static_cast<int>(*y);
    }
    if (r[5] != "0" && r[5] != "1") fail(file, line, "outcome must be 0 or 1");
    s.outcome = r[5] == "1" ? 1 : 0;
    return s;
}

std::string key_of(const std::string& student, const std::string& course) {
    return course + '\x1f' + student;
}

}  // namespace

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::Video: return "video";
        case EventKind::QuizResponse: return "quiz_response";
        case EventKind::Forum: return "forum";
    }
    return "";
}

std::string to_string(ForumAction a) {
    switch (a) {
        case ForumAction::Post: return "forum_post";
        case ForumAction::Reply: return "forum_reply";
        case ForumAction::View: return "forum_view";
    }
    return "";
}

std::string to_string(Gender g) { return g == Gender::M ? "M" : "F"; }

std::string to_string(Continent c) {
    switch (c) {
        case Continent::AS: return "AS";
        case Continent::AF: return "AF";
        case Continent::EU: return "EU";
        case Continent::NA: return "NA";
        case Continent::SA: return "SA";
    }
    return "";
}

std::optional<ForumAction> parse_forum_action(const std::string& s) {
    if (s == "forum_post") return ForumAction::Post;
    if (s == "forum_reply") return ForumAction::Reply;
    if (s == "forum_view") return ForumAction::View;
    return std::nullopt;
}

std::vector<int> Dataset::students_in_course(int course) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < students.size(); ++i) {
        if (course_of[i] == course) out.push_back(static_cast<int>(i));
    }
    return out;
}

std::uint64_t Dataset::content_hash() const {
    std::ostringstream os;
    write_students_csv(*this, os);
    write_events_csv(*this, os);
    return fnv1a64(os.str());
}

Dataset assemble(std::vector<EventRecord> events, std::vector<StudentRecord> students) {
    Dataset ds;
    std::map<std::string, std::size_t> index;  // ordered by (course, student)
    for (std::size_t i = 0; i < students.size(); ++i) {
        const auto key = key_of(students[i].student_id, students[i].course_id);
        if (!index.emplace(key, i).second) {
            throw DataError("duplicate student '" + students[i].student_id + "' in course '" +
                            students[i].course_id + "'");
        }
    }
    std::map<std::string, std::size_t> position;
    ds.students.reserve(students.size());
    for (const auto& [key, i] : index) {
        position.emplace(key, ds.students.size());
        ds.students.push_back(Student{std::move(students[i]), {}});
    }
    std::set<std::string> courses;
    for (const auto& s : ds.students) courses.insert(s.info.course_id);
    ds.course_ids.assign(courses.begin(), courses.end());
    for (const auto& s : ds.students) {
        auto it = std::lower_bound(ds.course_ids.begin(), ds.course_ids.end(), s.info.course_id);
        ds.course_of.push_back(static_cast<int>(it - ds.course_ids.begin()));
    }

    for (std::size_t i = 0; i < events.size(); ++i) {
        auto it = position.find(key_of(events[i].student_id, events[i].course_id));
        if (it == position.end()) {
            throw DataError("event " + std::to_string(i + 1) + " references unknown student '" +
                            events[i].student_id + "' in course '" + events[i].course_id + "'");
        }
        ds.students[it->second].events.push_back(std::move(events[i]));
    }

    std::size_t duplicates = 0;
    for (auto& s : ds.students) {
        std::stable_sort(s.events.begin(), s.events.end(),
                         [](const EventRecord& a, const EventRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
        // Only the first response per (student, video) counts.
        std::set<std::string> answered;
        std::erase_if(s.events, [&](const EventRecord& e) {
            if (e.kind != EventKind::QuizResponse) return false;
            if (answered.insert(*e.video_id).second) return false;
            ++duplicates;
            return true;
        });
    }
    if (duplicates > 0) {
        ds.warnings.push_back("dropped " + std::to_string(duplicates) +
                              " repeated quiz responses (first response kept)");
    }
    for (const auto& w : ds.warnings) spdlog::warn("{}", w);
    return ds;
}

Dataset ingest_streams(std::istream& events, std::istream& students, bool events_jsonl,
                       bool students_jsonl) {
    std::vector<StudentRecord> srecs;
    for (auto& [line, row] : read_rows(students, students_jsonl, kStudentsHeader, "students")) {
        srecs.push_back(parse_student(row, line, "students"));
    }
    std::vector<EventRecord> erecs;
    for (auto& [line, row] : read_rows(events, events_jsonl, kEventsHeader, "events")) {
        erecs.push_back(parse_event(row, line, "events"));
    }
    return assemble(std::move(erecs), std::move(srecs));
}

Dataset ingest(const std::filesystem::path& events, const std::filesystem::path& students) {
    std::ifstream ev(events);
    if (!ev) throw DataError("cannot open " + events.string());
    std::ifstream st(students);
    if (!st) throw DataError("cannot open " + students.string());
    return ingest_streams(ev, st, looks_like_jsonl(events), looks_like_jsonl(students));
}

void write_events_csv(const Dataset& ds, std::ostream& out) {
    out << kEventsHeader << '\n';
    for (const auto& s : ds.students) {
        for (const auto& e : s.events) {
            out << e.student_id << ',' << e.course_id << ',' << to_string(e.kind) << ','
                << e.video_id.value_or("") << ',';
            if (e.response) out << *e.response;
            out << ',';
            if (e.forum_action) out << to_string(*e.forum_action);
            out << ',' << e.timestamp << '\n';
        }
    }
}

void write_students_csv(const Dataset& ds, std::ostream& out) {
    out << kStudentsHeader << '\n';
    for (const auto& s : ds.students) {
        const auto& r = s.info;
        out << r.student_id << ',' << r.course_id << ',';
        if (r.gender) out << to_string(*r.gender);
        out << ',';
        if (r.continent) out << to_string(*r.continent);
        out << ',';
        if (r.birth_year) out << *r.birth_year;
        out << ',' << r.outcome << '\n';
    }
}

void export_csv(const Dataset& ds, const std::filesystem::path& events,
                const std::filesystem::path& students) {
    std::ofstream ev(events, std::ios::binary);
    if (!ev) throw DataError("cannot write " + events.string());
    write_events_csv(ds, ev);
    std::ofstream st(students, std::ios::binary);
    if (!st) throw DataError("cannot write " + students.string());
    write_students_csv(ds, st);
}

}  // namespace hierfed::data
