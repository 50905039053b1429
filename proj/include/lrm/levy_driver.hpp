#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace lrm {

/// Thrown for invalid model, grid or solver parameters.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class DriverKind { GammaProcess, CompoundPoisson };

/// How the exponential jump parameter of a compound Poisson driver is read.
/// `Rate`: jumps ~ Exp(rate = alpha), mean 1/alpha. `Mean`: mean jump = alpha.
enum class JumpConvention { Rate, Mean };

/// Increasing pure-jump Levy driver.
///
/// GammaProcess: L(t) ~ Gamma(shape = gamma * t, rate = alpha).
/// CompoundPoisson: intensity gamma, exponential jumps parametrised by alpha
/// under `jump_mean_convention`.
struct LevyDriverSpec {
    DriverKind kind = DriverKind::GammaProcess;
    double gamma = 1.0;
    double alpha = 1.0;
    JumpConvention jump_mean_convention = JumpConvention::Rate;

    void validate() const;
};

/// Compensator integral of the Levy measure, the mean of L(1).
double first_moment(const LevyDriverSpec& spec);

/// Second moment integral of z^2 against the Levy measure, i.e. Var(L(1)).
double second_moment(const LevyDriverSpec& spec);

/// Independent, reproducible random stream keyed by (seed, stream_id).
///
/// Streams with the same key produce the same sequence regardless of which
/// thread draws from them or in which order other streams are consumed.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

/// Draws L(t + h) - L(t). Always nonnegative; exactly 0 for h == 0.
/// Throws ParameterError for h < 0.
double sample_increment(const LevyDriverSpec& spec, double h, RngStream& rng);

std::string to_string(DriverKind kind);
std::string to_string(JumpConvention convention);

}  // namespace lrm
