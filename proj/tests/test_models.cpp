#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hierfed/errors.hpp"
#include "hierfed/models/embedding_export.hpp"
#include "hierfed/models/objective.hpp"
#include "hierfed/nn/grad_check.hpp"
#include "test_util.hpp"

using namespace hierfed;
using namespace hierfed::models;
using hierfed::data::EventKind;
using hierfed::data::EventRecord;
using hierfed::data::ForumAction;
using hierfed::data::StudentRecord;

namespace {

EventRecord video(const std::string& s, const std::string& c, const std::string& v,
                  std::int64_t ts) {
    return {s, c, EventKind::Video, v, std::nullopt, std::nullopt, ts};
}
EventRecord quiz(const std::string& s, const std::string& c, const std::string& v, int r,
                 std::int64_t ts) {
    return {s, c, EventKind::QuizResponse, v, r, std::nullopt, ts};
}
EventRecord forum(const std::string& s, const std::string& c, ForumAction a, std::int64_t ts) {
    return {s, c, EventKind::Forum, std::nullopt, std::nullopt, a, ts};
}

// Two courses; u3 only visits the forum, u4 has a single quiz response.
data::Dataset toy_dataset() {
    std::vector<StudentRecord> students = {
        {"u1", "A", data::Gender::M, std::nullopt, 1985, 1},
        {"u2", "A", data::Gender::F, std::nullopt, std::nullopt, 0},
        {"u3", "B", std::nullopt, data::Continent::EU, 1975, 1},
        {"u4", "B", data::Gender::F, std::nullopt, 1995, 0},
    };
    std::vector<EventRecord> events = {
        video("u1", "A", "v1", 10), quiz("u1", "A", "v1", 1, 20), video("u1", "A", "v2", 30),
        quiz("u1", "A", "v2", 0, 40), forum("u1", "A", ForumAction::Post, 50),
        video("u1", "A", "v3", 60), quiz("u1", "A", "v3", 1, 70),
        video("u2", "A", "v2", 5), quiz("u2", "A", "v2", 1, 6), video("u2", "A", "v1", 7),
        quiz("u2", "A", "v1", 0, 8),
        forum("u3", "B", ForumAction::View, 1), forum("u3", "B", ForumAction::Reply, 2),
        video("u4", "B", "w1", 3), quiz("u4", "B", "w1", 1, 4),
    };
    return data::assemble(std::move(events), std::move(students));
}

std::vector<int> all_ids(const data::Dataset& ds) {
    std::vector<int> ids(ds.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return ids;
}

constexpr double kFdStep = 1e-5;
constexpr double kRelTol = 1e-4;

}  // namespace

TEST_CASE("interaction encoding layout") {
    Vocab v;
    v.num_courses = 3;
    v.num_videos = 5;
    v.video_slots.resize(3);
    nn::Vec e = encode_interaction(1, 2, v);
    nn::Vec want(8);
    want << 0, 1, 0, 0, 0, 1, 0, 0;
    CHECK(e == want);

    Vocab one;
    one.num_courses = 1;
    one.num_videos = 1;
    one.video_slots.resize(1);
    CHECK(encode_interaction(0, 0, one) == nn::Vec::Ones(2));

    for (int c = 0; c < 3; ++c) {
        for (int vid = 0; vid < 5; ++vid) {
            const nn::Vec x = encode_interaction(c, vid, v);
            CHECK(x.sum() == 2.0);
            CHECK((x.array() != 0.0).count() == 2);
        }
    }
    CHECK_THROWS_AS(encode_interaction(3, 0, v), DomainError);
    CHECK_THROWS_AS(encode_interaction(0, 5, v), DomainError);
}

TEST_CASE("activity encoding blocks") {
    Vocab v;
    v.num_courses = 2;
    v.num_videos = 3;
    v.video_slots.resize(2);
    const int items = interaction_dim(v);

    const nn::Vec f = encode_activity(ForumStep{1, ForumAction::View}, v);
    CHECK(f.size() == 2 + 3 + 2 + 3);
    CHECK(f.segment(2, 3).isZero(0.0));
    CHECK(f.segment(items, 2).isZero(0.0));
    CHECK(f.segment(items + 2, 3).sum() == 1.0);
    CHECK(f[items + 2 + 2] == 1.0);

    const nn::Vec a = encode_activity(VideoStep{0, 2, 1}, v);
    CHECK(a.size() == activity_dim(v));
    CHECK(a.segment(items + 2, 3).isZero(0.0));
    CHECK(a[0] == 1.0);
    CHECK(a[2 + 2] == 1.0);
    CHECK(a[items + 1] == 1.0);

    const nn::Vec b = encode_activity(VideoStep{0, 1, std::nullopt}, v);
    CHECK(b.segment(items, 5).isZero(0.0));
    CHECK_THROWS_AS(encode_activity(VideoStep{0, 3, 1}, v), DomainError);
}

TEST_CASE("sequence building") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    CHECK(vocab.num_courses == 2);
    CHECK(vocab.num_videos == 4);  // three videos in A plus the unknown slot

    std::size_t excluded = 0;
    const auto kt = build_kt_sequences(ds, vocab, kDefaultMaxSteps, &excluded);
    CHECK(excluded == 1);  // forum-only student
    REQUIRE(kt.size() == 3);
    CHECK(kt[0].steps.size() == 3);  // one step per quiz response
    CHECK(kt[0].steps[1].response == 0);

    const auto op = build_op_sequences(ds, vocab, kDefaultMaxSteps, &excluded);
    CHECK(excluded == 0);
    REQUIRE(op.size() == 4);
    CHECK(op[0].steps.size() == 4);  // three answered videos and one post
    CHECK(std::get<VideoStep>(op[0].steps[1]).response == 0);
    CHECK(std::holds_alternative<ForumStep>(op[0].steps[2]));
    CHECK(op[2].steps.size() == 2);

    const auto truncated = build_op_sequences(ds, vocab, 2);
    CHECK(truncated[0].steps.size() == 2);

    // Videos seen only outside the vocabulary's students map to the unknown slot.
    const auto partial = build_vocab(ds, {1});
    CHECK(partial.video_slot(0, "v3") == partial.unknown_video());
    CHECK(partial.video_slot(1, "w1") == partial.unknown_video());
}

TEST_CASE("zero parameters predict one half") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    const auto kt = build_kt_sequences(ds, vocab);
    const auto kt_zero = zero_params(make_model_spec(Task::KT, vocab, 6));
    std::size_t predictable = 0;
    for (const auto& s : kt) {
        const auto trace = kt_forward(s, vocab, kt_zero);
        CHECK(trace.probs.size() == s.steps.size() - 1);
        predictable += trace.probs.size();
        for (const auto& p : trace.probs) CHECK(p == nn::Vec::Constant(2, 0.5));
    }
    CHECK(predictable == 2 + 1 + 0);
    const double loss = kt_loss(kt, vocab, kt_zero).first;
    CHECK(loss == doctest::Approx(static_cast<double>(predictable) * std::log(2.0)).epsilon(1e-14));

    const auto op = build_op_sequences(ds, vocab);
    const auto op_zero = zero_params(make_model_spec(Task::OP, vocab, 6));
    for (const auto& s : op) {
        const auto trace = op_forward(s, vocab, op_zero);
        CHECK(trace.probs == nn::Vec::Constant(2, 0.5));
        CHECK(trace.embedding().isZero(0.0));
        CHECK(extract_embedding(s, vocab, op_zero).isZero(0.0));
    }
    CHECK(op_loss(op, vocab, op_zero).first ==
          doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("single-step sequences") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    Rng rng(1);
    const auto kt_p = init_params(make_model_spec(Task::KT, vocab, 5), rng);
    InteractionSeq one{0, {{0, 0, 1}}};
    CHECK(kt_forward(one, vocab, kt_p).probs.empty());
    CHECK(kt_loss(std::vector<InteractionSeq>{one}, vocab, kt_p).first == 0.0);

    const auto op_p = init_params(make_model_spec(Task::OP, vocab, 5), rng);
    ActivitySeq single{0, {VideoStep{0, 1, 1}}, 1};
    const auto trace = op_forward(single, vocab, op_p);
    CHECK(trace.alphas().size() == 1);
    CHECK(trace.alphas()[0] == 1.0);
    CHECK(trace.embedding() == trace.steps[0].h);

    CHECK_THROWS_AS(kt_forward(InteractionSeq{0, {}}, vocab, kt_p), DomainError);
    CHECK_THROWS_AS(op_forward(ActivitySeq{0, {}, 0}, vocab, op_p), DomainError);
}

TEST_CASE("kt gradient matches finite differences") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    const auto seqs = build_kt_sequences(ds, vocab);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Rng rng(seed);
        auto p = zero_params(make_model_spec(Task::KT, vocab, 8));
        testutil::fill_uniform(p, rng);
        const auto [loss, grad] = kt_loss(seqs, vocab, p);
        CHECK(loss > 0.0);
        auto fd = nn::finite_diff_grad(
            [&](const nn::ParamSet& q) { return kt_loss(seqs, vocab, q).first; }, p, kFdStep);
        CHECK(nn::max_relative_error(grad, fd) <= kRelTol);
    }
}

TEST_CASE("op gradient matches finite differences") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    const auto seqs = build_op_sequences(ds, vocab);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Rng rng(10 + seed);
        auto p = zero_params(make_model_spec(Task::OP, vocab, 8));
        testutil::fill_uniform(p, rng);
        const auto [loss, grad] = op_loss(seqs, vocab, p);
        auto fd = nn::finite_diff_grad(
            [&](const nn::ParamSet& q) { return op_loss(seqs, vocab, q).first; }, p, kFdStep);
        CHECK(nn::max_relative_error(grad, fd) <= kRelTol);
    }
}

TEST_CASE("loss additivity and batch order") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    Rng rng(3);
    const auto kt_p = init_params(make_model_spec(Task::KT, vocab, 6), rng);
    auto kt = build_kt_sequences(ds, vocab);
    const double single = kt_loss(kt, vocab, kt_p).first;
    auto doubled = kt;
    doubled.insert(doubled.end(), kt.begin(), kt.end());
    CHECK(kt_loss(doubled, vocab, kt_p).first == doctest::Approx(2.0 * single).epsilon(1e-15));

    double looped = 0.0;
    for (const auto& s : kt) looped += kt_loss(std::vector<InteractionSeq>{s}, vocab, kt_p).first;
    CHECK(looped == doctest::Approx(single).epsilon(1e-14));

    const auto op_p = init_params(make_model_spec(Task::OP, vocab, 6), rng);
    auto op = build_op_sequences(ds, vocab);
    const auto fwd = op_loss(op, vocab, op_p);
    std::reverse(op.begin(), op.end());
    const auto rev = op_loss(op, vocab, op_p);
    CHECK(fwd.first == rev.first);
    CHECK(fwd.second == rev.second);
}

TEST_CASE("confident correct predictions hit the clamp floor") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    auto p = zero_params(make_model_spec(Task::OP, vocab, 3));
    // Huge bias toward the true class of a pass-labelled student.
    p.at("out.b")(1, 0) = 100.0;
    ActivitySeq s{0, {ForumStep{0, ForumAction::View}}, 1};
    const double loss = op_loss(std::vector<ActivitySeq>{s, s}, vocab, p).first;
    CHECK(loss == doctest::Approx(2e-7).epsilon(1e-6));
}

TEST_CASE("kt predictions are causal") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    Rng rng(5);
    const auto p = init_params(make_model_spec(Task::KT, vocab, 6), rng);
    InteractionSeq a{0, {{0, 0, 1}, {0, 1, 0}, {0, 2, 1}, {0, 0, 0}}};
    InteractionSeq b = a;
    b.steps[2] = {0, 1, 0};  // perturb step index 2
    const auto ta = kt_forward(a, vocab, p);
    const auto tb = kt_forward(b, vocab, p);
    CHECK(ta.probs[0] == tb.probs[0]);
    CHECK(ta.probs[1] == tb.probs[1]);
    CHECK(ta.probs[2] != tb.probs[2]);
}

TEST_CASE("attention over identical steps is uniform") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    Rng rng(6);
    auto p = init_params(make_model_spec(Task::OP, vocab, 4), rng);
    // Zero recurrence and a saturated update gate make h_t a function of x_t alone.
    p.at("gru.U").setZero();
    p.at("gru.b").topRows(4).setConstant(50.0);
    ActivitySeq s{0, std::vector<ActivityStep>(5, VideoStep{0, 1, 1}), 1};
    const auto t = op_forward(s, vocab, p);
    CHECK(std::abs(t.alphas().sum() - 1.0) <= 1e-10);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(t.alphas()[i] == doctest::Approx(0.2));
    CHECK((t.embedding() - t.steps[0].h).norm() < 1e-14);
}

TEST_CASE("objectives score and skip unusable students") {
    const auto ds = toy_dataset();
    const auto vocab = build_vocab(ds, all_ids(ds));
    KtObjective kt(ds, vocab, 4);
    CHECK(kt.usable(0));
    CHECK_FALSE(kt.usable(2));
    CHECK(kt.excluded() == 1);
    Rng rng(2);
    const auto p = kt.init(rng);
    Scored s;
    kt.score(0, p, s);
    CHECK(s.size() == 2);
    CHECK(s.labels == std::vector<int>{0, 1});
    CHECK_THROWS_AS(kt.score(2, p, s), DomainError);

    const std::vector<int> ids = {3, 0, 1};
    nn::GradSet g1 = nn::zeros_like(p), g2 = nn::zeros_like(p);
    const std::vector<int> sorted = {0, 1, 3};
    CHECK(kt.loss(ids, p, &g1) == kt.loss(sorted, p, &g2));
    CHECK(g1 == g2);

    OpObjective op(ds, vocab, 4);
    const auto q = op.init(rng);
    Scored o;
    for (int i = 0; i < 4; ++i) op.score(i, q, o);
    CHECK(o.labels == std::vector<int>{1, 0, 1, 0});
    CHECK(op.embedding(2, q) == extract_embedding(build_op_sequences(ds, vocab)[2], vocab, q));
}

TEST_CASE("embedding csv") {
    std::ostringstream out;
    EmbeddingRow row{"u1", "A", "gender", "M", nn::Vec::Constant(3, 0.25)};
    write_embeddings_csv(std::vector<EmbeddingRow>{row, row}, 3, out);
    std::istringstream in(out.str());
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "student_id,course,demographic_variable,subgroup,dim_0,dim_1,dim_2");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 6);
    }
    CHECK(rows == 2);
    CHECK_THROWS_AS(write_embeddings_csv(std::vector<EmbeddingRow>{row}, 4, out), ShapeError);
}
