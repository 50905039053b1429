#include "lrm/time_grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lrm/levy_driver.hpp"

namespace lrm {

TimeGrid::TimeGrid(double t_end, std::size_t n_steps) : t_end_(t_end), n_steps_(n_steps) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw ParameterError("time grid: horizon must be positive");
    }
    if (n_steps == 0) {
        throw ParameterError("time grid: need at least one step");
    }
    h_ = t_end / static_cast<double>(n_steps);
}

double TimeGrid::time(std::size_t k) const {
    if (k == n_steps_) {
        return t_end_;
    }
    return static_cast<double>(k) * t_end_ / static_cast<double>(n_steps_);
}

bool TimeGrid::on_grid(double t) const {
    if (!std::isfinite(t)) {
        return false;
    }
    const double x = t / h_;
    const double r = std::round(x);
    return std::abs(x - r) <= 1e-9 && r >= 0.0 && r <= static_cast<double>(n_steps_);
}

std::size_t TimeGrid::index_of(double t) const {
    if (!on_grid(t)) {
        throw ParameterError("time " + std::to_string(t) + " is not a point of the hedging grid");
    }
    return static_cast<std::size_t>(std::round(t / h_));
}

double StepFunction::operator()(double t) const {
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    return values[static_cast<std::size_t>(it - breaks.begin())];
}

double StepFunction::min_value() const { return *std::min_element(values.begin(), values.end()); }

void StepFunction::validate(const char* what) const {
    if (values.size() != breaks.size() + 1) {
        throw ParameterError(std::string(what) + ": step function needs one more value than breaks");
    }
    if (!std::is_sorted(breaks.begin(), breaks.end()) ||
        std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end()) {
        throw ParameterError(std::string(what) + ": breaks must be strictly increasing");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ParameterError(std::string(what) + ": non-finite value");
        }
    }
}

}  // namespace lrm
