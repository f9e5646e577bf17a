#pragma once

#include <functional>
#include <vector>

#include "uavrl/tape.hpp"

namespace uavrl::ag {

// Builds a scalar loss from leaf handles registered on the given tape. The
// handles arrive in the same order as the master parameters.
using ScalarGraphFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Central-difference check of the tape gradients of f at `params`.
// Returns the max over coordinates of |fd - grad| / max(1e-8, |fd| + |grad|).
double grad_check(const ScalarGraphFn& f, const std::vector<Tensor>& params, double h = 1e-5);

}  // namespace uavrl::ag
