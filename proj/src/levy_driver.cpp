#include "lrm/levy_driver.hpp"

#include <cmath>

namespace lrm {

void LevyDriverSpec::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ParameterError("levy driver: gamma must be positive and finite");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ParameterError("levy driver: alpha must be positive and finite");
    }
}

namespace {

double mean_jump(const LevyDriverSpec& spec) {
    return spec.jump_mean_convention == JumpConvention::Rate ? 1.0 / spec.alpha : spec.alpha;
}

}  // namespace

double first_moment(const LevyDriverSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case DriverKind::GammaProcess:
            return spec.gamma / spec.alpha;
        case DriverKind::CompoundPoisson:
            return spec.gamma * mean_jump(spec);
    }
    throw ParameterError("levy driver: unknown kind");
}

double second_moment(const LevyDriverSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case DriverKind::GammaProcess:
            return spec.gamma / (spec.alpha * spec.alpha);
        case DriverKind::CompoundPoisson: {
            // E[J^2] = 2 mean^2 for exponential jumps
            const double m = mean_jump(spec);
            return spec.gamma * 2.0 * m * m;
        }
    }
    throw ParameterError("levy driver: unknown kind");
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x6c726d5fu};
    engine_.seed(seq);
}

double sample_increment(const LevyDriverSpec& spec, double h, RngStream& rng) {
    if (!(h >= 0.0) || !std::isfinite(h)) {
        throw ParameterError("sample_increment: time step must be nonnegative and finite");
    }
    if (h == 0.0) {
        return 0.0;
    }
    switch (spec.kind) {
        case DriverKind::GammaProcess: {
            std::gamma_distribution<double> dist(spec.gamma * h, 1.0 / spec.alpha);
            return dist(rng.engine());
        }
        case DriverKind::CompoundPoisson: {
            std::poisson_distribution<long> arrivals(spec.gamma * h);
            const long n = arrivals(rng.engine());
            if (n == 0) {
                return 0.0;
            }
            std::exponential_distribution<double> jump(1.0 / mean_jump(spec));
            double total = 0.0;
            for (long i = 0; i < n; ++i) {
                total += jump(rng.engine());
            }
            return total;
        }
    }
    throw ParameterError("levy driver: unknown kind");
}

std::string to_string(DriverKind kind) {
    return kind == DriverKind::GammaProcess ? "gamma" : "compound_poisson";
}

std::string to_string(JumpConvention convention) {
    return convention == JumpConvention::Rate ? "rate" : "mean";
}

}  // namespace lrm
