#pragma once

#include <cstddef>
#include <vector>

namespace lrm {

/// Uniform hedging grid t_0 = 0 < t_1 < ... < t_T = t_end.
class TimeGrid {
public:
    TimeGrid(double t_end, std::size_t n_steps);

    double t_end() const { return t_end_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t n_points() const { return n_steps_ + 1; }
    double h() const { return h_; }

    /// t_k = k * t_end / T, computed directly rather than by accumulation.
    double time(std::size_t k) const;

    /// Index k with t_k == t. Throws ParameterError if t is not a grid point
    /// (relative mismatch above 1e-9 of a step) or lies outside [0, t_end].
    std::size_t index_of(double t) const;

    bool on_grid(double t) const;

private:
    double t_end_;
    std::size_t n_steps_;
    double h_;
};

/// Right-continuous step function: values[i] on [breaks[i-1], breaks[i]),
/// with breaks[-1] = -inf and breaks[n] = +inf.
struct StepFunction {
    std::vector<double> breaks;
    std::vector<double> values{1.0};

    static StepFunction constant(double value) { return StepFunction{{}, {value}}; }

    double operator()(double t) const;
    bool is_constant() const { return breaks.empty(); }
    double min_value() const;
    void validate(const char* what) const;
};

}  // namespace lrm
