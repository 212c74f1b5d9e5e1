#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "hierfed/errors.hpp"
#include "hierfed/nn/param_set.hpp"

namespace hierfed::nn {

/// Central-difference gradient of a scalar loss. Used as the test oracle for
/// every hand-written backward pass.
template <typename Scalar, typename LossFn>
ParamSetT<Scalar> finite_diff_grad(LossFn&& loss_fn, const ParamSetT<Scalar>& params,
                                   Scalar step) {
    if (!(step > 0)) throw DomainError("finite difference step must be positive");
    ParamSetT<Scalar> probe = params;
    ParamSetT<Scalar> grad = zeros_like(params);
    for (std::size_t l = 0; l < probe.size(); ++l) {
        auto& t = probe[l];
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const Scalar orig = t.data()[i];
            t.data()[i] = orig + step;
            const Scalar up = loss_fn(static_cast<const ParamSetT<Scalar>&>(probe));
            t.data()[i] = orig - step;
            const Scalar down = loss_fn(static_cast<const ParamSetT<Scalar>&>(probe));
            t.data()[i] = orig;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                throw NumericalError("non-finite loss while probing layer '" + probe.name(l) +
                                     "' element " + std::to_string(i));
            }
            grad[l].data()[i] = (up - down) / (Scalar(2) * step);
        }
    }
    return grad;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps elements whose
/// true gradient is ~0 from dominating through finite-difference round-off.
template <typename Scalar>
Scalar max_relative_error(const ParamSetT<Scalar>& a, const ParamSetT<Scalar>& b,
                          Scalar floor = Scalar(1e-6)) {
    check_congruent(a, b);
    Scalar worst = 0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        for (Eigen::Index i = 0; i < a[l].size(); ++i) {
            const Scalar x = a[l].data()[i], y = b[l].data()[i];
            const Scalar denom = std::max({std::abs(x), std::abs(y), floor});
            worst = std::max(worst, std::abs(x - y) / denom);
        }
    }
    return worst;
}

}  // namespace hierfed::nn
