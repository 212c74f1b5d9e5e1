#pragma once

#include "hierfed/models/sequences.hpp"
#include "hierfed/nn/layers.hpp"

namespace hierfed::models {

// Layouts:
//   item        = 1(c) + 1(v)                      |C| + |V|
//   kt input    = item + 1(r)                      |C| + |V| + 2
//   activity    = 1(c) + 1(v) + 1(r) + 1(f)        |C| + |V| + 2 + 3
// Forum steps leave the video and response blocks zero; video steps leave the
// forum block zero (and the response block too if no quiz answer followed).

inline int interaction_dim(const Vocab& v) { return v.num_courses + v.num_videos; }
inline int kt_input_dim(const Vocab& v) { return interaction_dim(v) + 2; }
inline int activity_dim(const Vocab& v) { return interaction_dim(v) + 2 + 3; }

nn::Vec encode_interaction(int course, int video, const Vocab& vocab);
nn::Vec encode_activity(const ActivityStep& step, const Vocab& vocab);

nn::OneHotInput kt_input(const KtStep& step, const Vocab& vocab);
nn::OneHotInput activity_input(const ActivityStep& step, const Vocab& vocab);

}  // namespace hierfed::models
