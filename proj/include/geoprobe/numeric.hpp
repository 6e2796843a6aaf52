#pragma once

#include <span>
#include <string>
#include <vector>

namespace geoprobe {

using Vector = std::vector<double>;

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> v);

// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

// Strict decimal parse of a whole token; returns false on trailing garbage.
bool parse_real(std::string_view token, double& out);

// log(sum(exp(x))) computed with max-shift.
double log_sum_exp(std::span<const double> x);

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> x);

}  // namespace geoprobe
