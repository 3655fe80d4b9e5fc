#pragma once

#include <string>

#include "oed/rounding.hpp"

namespace oed {

/// {counts, k, b, criterion, objective, relaxation_objective, ratio,
///  lambda_min_whitened, mode, alpha}
std::string design_json(const IntegralDesign& design, const Criterion& c,
                        const SelectReport& report);

/// {weights, k, b}
std::string fractional_json(const FractionalDesign& pi);

FractionalDesign parse_fractional_json(const std::string& text);

}  // namespace oed
