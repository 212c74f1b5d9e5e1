#include "hierfed/models/model.hpp"

#include <cmath>

#include "hierfed/errors.hpp"

namespace hierfed::models {

namespace {

struct LayerShape {
    const char* name;
    Eigen::Index rows, cols, fan_in;
    bool bias;
};

std::vector<LayerShape> layout(const ModelSpec& s) {
    const Eigen::Index k = s.hidden, in = s.input_dim;
    if (s.task == Task::KT) {
        return {{"lstm.W", 4 * k, in, in, false},
                {"lstm.U", 4 * k, k, k, false},
                {"lstm.b", 4 * k, 1, 1, true},
                {"out.W", k, 2, k, false},
                {"out.b", 2, 1, 1, true}};
    }
    return {{"gru.W", 3 * k, in, in, false},
            {"gru.U", 3 * k, k, k, false},
            {"gru.b", 3 * k, 1, 1, true},
            {"attn.W", k, k, k, false},
            {"attn.p", k, 1, k, false},
            {"out.W", k, 2, k, false},
            {"out.b", 2, 1, 1, true}};
}

}  // namespace

ModelSpec make_model_spec(Task task, const Vocab& vocab, int hidden) {
    if (hidden < 1) throw ConfigError("hidden dimension must be at least 1");
    return {task, hidden, task == Task::KT ? kt_input_dim(vocab) : activity_dim(vocab)};
}

nn::ParamSet zero_params(const ModelSpec& spec) {
    nn::ParamSet p;
    for (const auto& l : layout(spec)) p.add(l.name, nn::Tensor::Zero(l.rows, l.cols));
    return p;
}

nn::ParamSet init_params(const ModelSpec& spec, Rng& rng) {
    nn::ParamSet p;
    for (const auto& l : layout(spec)) {
        nn::Tensor t = nn::Tensor::Zero(l.rows, l.cols);
        if (!l.bias) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, l.fan_in)));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
        }
        p.add(l.name, std::move(t));
    }
    return p;
}

}  // namespace hierfed::models
