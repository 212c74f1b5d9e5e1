#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hierfed/errors.hpp"

namespace hierfed::nn {

// Row-major so that data() is the flat row-major value array.
template <typename Scalar>
using TensorT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Tensor = TensorT<double>;
using Vec = VecT<double>;

/// Ordered collection of named parameter tensors. Iteration order is insertion
/// order; every aggregation and norm walks layers in that order.
template <typename Scalar>
class ParamSetT {
public:
    using Tensor = TensorT<Scalar>;

    ParamSetT() = default;

    Tensor& add(std::string name, Tensor value) {
        for (const auto& [n, _] : layers_) {
            if (n == name) throw StructureError("duplicate layer name '" + name + "'");
        }
        layers_.emplace_back(std::move(name), std::move(value));
        return layers_.back().second;
    }

    std::size_t size() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }

    const std::string& name(std::size_t i) const { return layers_[i].first; }
    Tensor& operator[](std::size_t i) { return layers_[i].second; }
    const Tensor& operator[](std::size_t i) const { return layers_[i].second; }

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (layers_[i].first == name) return i;
        }
        throw StructureError("missing layer '" + name + "'");
    }
    bool contains(const std::string& name) const {
        for (const auto& [n, _] : layers_) {
            if (n == name) return true;
        }
        return false;
    }
    Tensor& at(const std::string& name) { return layers_[index_of(name)].second; }
    const Tensor& at(const std::string& name) const { return layers_[index_of(name)].second; }

    std::size_t total_len() const {
        std::size_t n = 0;
        for (const auto& [_, t] : layers_) n += static_cast<std::size_t>(t.size());
        return n;
    }

    auto begin() { return layers_.begin(); }
    auto end() { return layers_.end(); }
    auto begin() const { return layers_.begin(); }
    auto end() const { return layers_.end(); }

    friend bool operator==(const ParamSetT& a, const ParamSetT& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a.name(i) != b.name(i)) return false;
            if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
            if (a[i] != b[i]) return false;
        }
        return true;
    }

private:
    std::vector<std::pair<std::string, Tensor>> layers_;
};

using ParamSet = ParamSetT<double>;
// Gradients share the parameter container layout.
using GradSet = ParamSetT<double>;

template <typename Scalar>
void check_congruent(const ParamSetT<Scalar>& a, const ParamSetT<Scalar>& b) {
    if (a.size() != b.size()) {
        throw StructureError("parameter sets have " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()) + " layers");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.name(i) != b.name(i)) {
            throw StructureError("layer mismatch: '" + a.name(i) + "' vs '" + b.name(i) + "'");
        }
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) {
            throw StructureError("shape mismatch in layer '" + a.name(i) + "'");
        }
    }
}

template <typename Scalar>
ParamSetT<Scalar> zeros_like(const ParamSetT<Scalar>& p) {
    ParamSetT<Scalar> out;
    for (const auto& [name, t] : p) out.add(name, TensorT<Scalar>::Zero(t.rows(), t.cols()));
    return out;
}

/// y + a * x
template <typename Scalar>
ParamSetT<Scalar> axpy(Scalar a, const ParamSetT<Scalar>& x, const ParamSetT<Scalar>& y) {
    check_congruent(x, y);
    ParamSetT<Scalar> out = y;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
    return out;
}

template <typename Scalar>
void axpy_inplace(Scalar a, const ParamSetT<Scalar>& x, ParamSetT<Scalar>& y) {
    check_congruent(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

template <typename Scalar>
ParamSetT<Scalar> param_sub(const ParamSetT<Scalar>& p, const ParamSetT<Scalar>& q) {
    check_congruent(p, q);
    ParamSetT<Scalar> out = p;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= q[i];
    return out;
}

template <typename Scalar>
ParamSetT<Scalar> param_add(const ParamSetT<Scalar>& p, const ParamSetT<Scalar>& q) {
    check_congruent(p, q);
    ParamSetT<Scalar> out = p;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += q[i];
    return out;
}

template <typename Scalar>
ParamSetT<Scalar> param_scale(Scalar a, const ParamSetT<Scalar>& p) {
    ParamSetT<Scalar> out = p;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= a;
    return out;
}

/// L2 norm of one layer, flattened.
template <typename Scalar>
Scalar layer_norm(const ParamSetT<Scalar>& p, std::size_t layer) {
    return p[layer].norm();
}

/// L2 norm over every element of every layer.
template <typename Scalar>
Scalar param_norm(const ParamSetT<Scalar>& p) {
    Scalar sq = 0;
    for (const auto& [_, t] : p) sq += t.squaredNorm();
    return std::sqrt(sq);
}

/// Inner product of the flattened parameter vectors.
template <typename Scalar>
Scalar param_dot(const ParamSetT<Scalar>& p, const ParamSetT<Scalar>& q) {
    check_congruent(p, q);
    Scalar s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i].cwiseProduct(q[i]).sum();
    return s;
}

template <typename Scalar>
bool all_finite(const ParamSetT<Scalar>& p) {
    for (const auto& [_, t] : p) {
        if (!t.allFinite()) return false;
    }
    return true;
}

/// Rescales g in place so that its global L2 norm is at most max_norm.
/// max_norm <= 0 disables clipping. Returns the pre-clip norm.
template <typename Scalar>
Scalar clip_global_norm(ParamSetT<Scalar>& g, Scalar max_norm) {
    const Scalar n = param_norm(g);
    if (max_norm > 0 && n > max_norm) {
        const Scalar s = max_norm / n;
        for (auto& [_, t] : g) t *= s;
    }
    return n;
}

/// Flattened copy in layer order.
template <typename Scalar>
VecT<Scalar> flatten(const ParamSetT<Scalar>& p) {
    VecT<Scalar> v(static_cast<Eigen::Index>(p.total_len()));
    Eigen::Index off = 0;
    for (const auto& [_, t] : p) {
        v.segment(off, t.size()) = Eigen::Map<const VecT<Scalar>>(t.data(), t.size());
        off += t.size();
    }
    return v;
}

}  // namespace hierfed::nn
