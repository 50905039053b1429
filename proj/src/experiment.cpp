#include "lrm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace lrm {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ParameterError("config: " + where + " must be an object");
    }
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || item.key() == a;
        }
        if (!ok) {
            throw ParameterError("config: unknown key '" + item.key() + "' in " + where);
        }
    }
}

double number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw ParameterError("config: missing '" + std::string(key) + "' in " + where);
    }
    if (!j.at(key).is_number()) {
        throw ParameterError("config: '" + std::string(key) + "' in " + where + " must be a number");
    }
    return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j, key, where) : fallback;
}

std::size_t count_or(const json& j, const char* key, std::size_t fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_number_unsigned()) {
        throw ParameterError("config: '" + std::string(key) + "' in " + where +
                             " must be a nonnegative integer");
    }
    return j.at(key).get<std::size_t>();
}

bool flag_or(const json& j, const char* key, bool fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_boolean()) {
        throw ParameterError("config: '" + std::string(key) + "' in " + where + " must be a boolean");
    }
    return j.at(key).get<bool>();
}

std::string text_or(const json& j, const char* key, const std::string& fallback,
                    const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_string()) {
        throw ParameterError("config: '" + std::string(key) + "' in " + where + " must be a string");
    }
    return j.at(key).get<std::string>();
}

StepFunction parse_step(const json& j, const std::string& where) {
    if (j.is_number()) {
        return StepFunction::constant(j.get<double>());
    }
    check_keys(j, {"breaks", "values"}, where);
    StepFunction f;
    f.breaks = j.at("breaks").get<std::vector<double>>();
    f.values = j.at("values").get<std::vector<double>>();
    f.validate(where.c_str());
    return f;
}

json step_to_json(const StepFunction& f) {
    if (f.is_constant()) {
        return f.values[0];
    }
    return json{{"breaks", f.breaks}, {"values", f.values}};
}

LevyDriverSpec parse_driver(const json& j, const std::string& where) {
    check_keys(j, {"kind", "gamma", "alpha", "jump_mean_convention"}, where);
    LevyDriverSpec d;
    const std::string kind = text_or(j, "kind", "gamma", where);
    if (kind == "gamma") {
        d.kind = DriverKind::GammaProcess;
    } else if (kind == "compound_poisson") {
        d.kind = DriverKind::CompoundPoisson;
    } else {
        throw ParameterError("config: unknown driver kind '" + kind + "'");
    }
    d.gamma = number(j, "gamma", where);
    d.alpha = number(j, "alpha", where);
    const std::string conv = text_or(j, "jump_mean_convention", "rate", where);
    if (conv == "rate") {
        d.jump_mean_convention = JumpConvention::Rate;
    } else if (conv == "mean") {
        d.jump_mean_convention = JumpConvention::Mean;
    } else {
        throw ParameterError("config: jump_mean_convention must be 'rate' or 'mean'");
    }
    d.validate();
    return d;
}

LiquidityKind parse_liquidity_kind(const std::string& s) {
    if (s == "time_varying") {
        return LiquidityKind::TimeVarying;
    }
    if (s == "constant") {
        return LiquidityKind::Constant;
    }
    if (s == "zero") {
        return LiquidityKind::Zero;
    }
    throw ParameterError("config: unknown liquidity kind '" + s + "'");
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hedge_label(const std::vector<std::string>& labels) {
    std::string s;
    for (const auto& l : labels) {
        s += (s.empty() ? "" : ",") + l;
    }
    return s;
}

// The worker count does not change any result, so it is left out of the
// artifacts to keep them identical across thread counts.
json manifest_config(const ExperimentConfig& c) {
    json j = config_to_json(c);
    j["simulation"].erase("threads");
    return j;
}

json estimate_json(const Estimate& e) { return json{{"mean", e.mean}, {"se", e.se}}; }

json criteria_json(const CriteriaReport& r) {
    json variability = json::array();
    for (const auto& e : r.variability_per_asset) {
        variability.push_back(estimate_json(e));
    }
    return json{{"T0", estimate_json(r.t0)},
                {"T0_tilde", estimate_json(r.t0_tilde)},
                {"L0", estimate_json(r.l0)},
                {"C0", estimate_json(r.c0)},
                {"L0_bar", estimate_json(r.l0_bar)},
                {"T0_alpha", estimate_json(r.t0_alpha)},
                {"strategy_variability", estimate_json(r.strategy_variability)},
                {"variability_per_asset", variability},
                {"V0", r.v0}};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + p.string());
    }
    out << content;
}

}  // namespace

std::vector<FuturesSpec> select_assets(const ExperimentConfig& c,
                                       const std::vector<std::string>& labels) {
    std::vector<FuturesSpec> out;
    for (const auto& a : c.assets) {
        if (std::find(labels.begin(), labels.end(), a.label) != labels.end()) {
            out.push_back(a);
        }
    }
    return out;
}

PartitionBuilder make_partition_builder(const ExperimentConfig& c, const PathSet& paths,
                              const ExtendedPriceSet& prices) {
    PartitionBuilder base =
        c.solver.state == BinningState::Prices
            ? price_partition_builder(prices, c.solver.bins_per_dim, c.solver.min_bin_count)
            : factor_partition_builder(paths, c.solver.bins_per_dim, c.solver.min_bin_count);
    if (c.solver.control == BinControl::None) {
        return base;
    }
    TimeGrid grid(c.t_end, c.n_steps);
    auto running = std::make_shared<std::vector<std::vector<double>>>(
        running_window_average(paths, grid, c.claim.t1c, c.claim.t2c));
    const std::size_t k1 = grid.index_of(c.claim.t1c);
    return [base, running, k1](std::size_t k) {
        BinPartition part = base(k);
        // Constant before the window opens, so there is nothing to fit.
        if (k > k1) {
            part.control = (*running)[k];
        }
        return part;
    };
}

void ExperimentConfig::validate() const {
    TimeGrid grid(t_end, n_steps);
    if (factors.empty()) {
        throw ParameterError("config: need at least one factor");
    }
    for (const auto& f : factors) {
        f.validate();
    }
    if (assets.empty()) {
        throw ParameterError("config: need at least one asset");
    }
    std::set<std::string> labels;
    for (std::size_t j = 0; j < assets.size(); ++j) {
        assets[j].validate(grid);
        if (!labels.insert(assets[j].label).second) {
            throw ParameterError("config: duplicate asset label " + assets[j].label);
        }
        if (j > 0 && assets[j].t2f < assets[j - 1].t2f) {
            throw ParameterError("config: assets not sorted by maturity");
        }
    }
    for (const auto& h : hedges) {
        if (h.empty()) {
            throw ParameterError("config: empty hedge set");
        }
        for (const auto& l : h) {
            if (!labels.count(l)) {
                throw ParameterError("config: hedge refers to unknown asset " + l);
            }
        }
    }
    if (!grid.on_grid(claim.t1c) || !grid.on_grid(claim.t2c) || !(claim.t1c < claim.t2c)) {
        throw ParameterError("config: claim window must be grid aligned with t1c < t2c");
    }
    LrmConfig lc{solver.alpha, solver.pd_tolerance, solver.fixed_point, 1, false,
                 solver.predictable_tolerance, solver.book_value};
    lc.validate();
    if (solver.bins_per_dim == 0) {
        throw ParameterError("config: bins_per_dim must be positive");
    }
    const auto& th = solver.conditions;
    if (th.delta && !(*th.delta > 0.0 && *th.delta < 1.0)) {
        throw ParameterError("config: conditions.delta must lie in (0, 1)");
    }
    if (!(th.pd_tolerance >= 0.0 && th.pd_tolerance < 1.0)) {
        throw ParameterError("config: conditions.pd_tolerance must lie in [0, 1)");
    }
    if (simulation.n_paths == 0) {
        throw ParameterError("config: n_paths must be positive");
    }
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j, {"name", "grid", "model", "assets", "hedges", "claim", "solver", "simulation",
                   "outputs"},
               "config");
    ExperimentConfig c;
    c.name = text_or(j, "name", c.name, "config");

    const json& g = j.at("grid");
    check_keys(g, {"t_end", "n_steps"}, "grid");
    c.t_end = number(g, "t_end", "grid");
    c.n_steps = count_or(g, "n_steps", c.n_steps, "grid");

    const json& m = j.at("model");
    check_keys(m, {"factors"}, "model");
    for (const auto& fj : m.at("factors")) {
        check_keys(fj, {"lambda", "sigma", "y0", "seasonality", "driver"}, "factor");
        OUFactorSpec f;
        f.lambda = number(fj, "lambda", "factor");
        f.sigma = parse_step(fj.at("sigma"), "factor sigma");
        f.y0 = number(fj, "y0", "factor");
        if (fj.contains("seasonality")) {
            f.seasonality = parse_step(fj.at("seasonality"), "factor seasonality");
        }
        f.driver = parse_driver(fj.at("driver"), "driver");
        c.factors.push_back(f);
    }

    for (const auto& aj : j.at("assets")) {
        check_keys(aj, {"label", "t1f", "t2f", "liquidity", "floor_fraction"}, "asset");
        FuturesSpec a;
        a.label = text_or(aj, "label", "", "asset");
        if (a.label.empty()) {
            throw ParameterError("config: asset needs a label");
        }
        a.t1f = number(aj, "t1f", "asset " + a.label);
        a.t2f = number(aj, "t2f", "asset " + a.label);
        if (aj.contains("floor_fraction")) {
            a.floor_fraction = number(aj, "floor_fraction", "asset " + a.label);
        }
        const json& lj = aj.at("liquidity");
        check_keys(lj, {"kind", "m", "n", "delta", "scale"}, "liquidity of " + a.label);
        a.liquidity.kind = parse_liquidity_kind(text_or(lj, "kind", "", "liquidity"));
        a.liquidity.m = number_or(lj, "m", 0.0, "liquidity");
        a.liquidity.n = number_or(lj, "n", 0.0, "liquidity");
        a.liquidity.delta = number_or(lj, "delta", 0.0, "liquidity");
        a.liquidity.scale = number_or(lj, "scale", 1.0, "liquidity");
        a.liquidity.t1f = a.t1f;
        a.liquidity.t2f = a.t2f;
        c.assets.push_back(a);
    }
    std::stable_sort(c.assets.begin(), c.assets.end(),
                     [](const FuturesSpec& x, const FuturesSpec& y) { return x.t2f < y.t2f; });

    if (j.contains("hedges")) {
        for (const auto& hj : j.at("hedges")) {
            c.hedges.push_back(hj.get<std::vector<std::string>>());
        }
    } else {
        std::vector<std::string> all;
        for (const auto& a : c.assets) {
            all.push_back(a.label);
        }
        c.hedges.push_back(all);
    }

    const json& cj = j.at("claim");
    check_keys(cj, {"t1c", "t2c", "strike"}, "claim");
    c.claim = {number(cj, "t1c", "claim"), number(cj, "t2c", "claim"), number(cj, "strike", "claim")};

    if (j.contains("solver")) {
        const json& sj = j.at("solver");
        check_keys(sj, {"alpha", "bins_per_dim", "min_bin_count", "pd_tolerance",
                        "predictable_tolerance", "state", "control", "book_value", "fixed_point",
                        "conditions"},
                   "solver");
        auto& s = c.solver;
        s.alpha = number_or(sj, "alpha", s.alpha, "solver");
        s.bins_per_dim = count_or(sj, "bins_per_dim", s.bins_per_dim, "solver");
        s.min_bin_count = count_or(sj, "min_bin_count", s.min_bin_count, "solver");
        s.pd_tolerance = number_or(sj, "pd_tolerance", s.pd_tolerance, "solver");
        s.predictable_tolerance =
            number_or(sj, "predictable_tolerance", s.predictable_tolerance, "solver");
        const std::string state = text_or(sj, "state", "factors", "solver");
        if (state == "factors") {
            s.state = BinningState::Factors;
        } else if (state == "prices") {
            s.state = BinningState::Prices;
        } else {
            throw ParameterError("config: solver.state must be 'factors' or 'prices'");
        }
        const std::string control = text_or(sj, "control", "claim_average", "solver");
        if (control == "claim_average") {
            s.control = BinControl::ClaimAverage;
        } else if (control == "none") {
            s.control = BinControl::None;
        } else {
            throw ParameterError("config: solver.control must be 'claim_average' or 'none'");
        }
        const std::string book = text_or(sj, "book_value", "nested", "solver");
        if (book == "nested") {
            s.book_value = BookValue::Nested;
        } else if (book == "pathwise") {
            s.book_value = BookValue::Pathwise;
        } else {
            throw ParameterError("config: solver.book_value must be 'nested' or 'pathwise'");
        }
        if (sj.contains("fixed_point")) {
            const json& fj = sj.at("fixed_point");
            check_keys(fj, {"max_iters", "tolerance"}, "fixed_point");
            s.fixed_point.max_iters = count_or(fj, "max_iters", s.fixed_point.max_iters, "fixed_point");
            s.fixed_point.tolerance = number_or(fj, "tolerance", s.fixed_point.tolerance, "fixed_point");
        }
        if (sj.contains("conditions")) {
            const json& kj = sj.at("conditions");
            check_keys(kj, {"tradeoff_bound", "tradeoff_lower", "f_diagonal_c", "f_diagonal_c_tilde",
                            "delta", "pd_tolerance", "covariance"},
                       "conditions");
            auto& t = s.conditions;
            t.tradeoff_bound = number_or(kj, "tradeoff_bound", t.tradeoff_bound, "conditions");
            t.tradeoff_lower = number_or(kj, "tradeoff_lower", t.tradeoff_lower, "conditions");
            t.f_diagonal_c = number_or(kj, "f_diagonal_c", t.f_diagonal_c, "conditions");
            t.f_diagonal_c_tilde =
                number_or(kj, "f_diagonal_c_tilde", t.f_diagonal_c_tilde, "conditions");
            if (kj.contains("delta")) {
                t.delta = number(kj, "delta", "conditions");
            }
            t.pd_tolerance = number_or(kj, "pd_tolerance", t.pd_tolerance, "conditions");
            const std::string cov = text_or(kj, "covariance", "model", "conditions");
            if (cov == "model") {
                s.condition_covariance = ConditionCovariance::Model;
            } else if (cov == "sampled") {
                s.condition_covariance = ConditionCovariance::Sampled;
            } else {
                throw ParameterError("config: conditions.covariance must be 'model' or 'sampled'");
            }
        }
        s.conditions.predictable_tolerance = s.predictable_tolerance;
    }

    if (j.contains("simulation")) {
        const json& sj = j.at("simulation");
        check_keys(sj, {"n_paths", "seed", "threads"}, "simulation");
        c.simulation.n_paths = count_or(sj, "n_paths", c.simulation.n_paths, "simulation");
        c.simulation.seed = count_or(sj, "seed", c.simulation.seed, "simulation");
        c.simulation.threads = count_or(sj, "threads", c.simulation.threads, "simulation");
    }

    if (j.contains("outputs")) {
        const json& oj = j.at("outputs");
        check_keys(oj, {"directory", "strategy_paths", "path_count", "paths_csv", "prices_csv"},
                   "outputs");
        auto& o = c.outputs;
        o.directory = text_or(oj, "directory", o.directory, "outputs");
        o.strategy_paths = flag_or(oj, "strategy_paths", o.strategy_paths, "outputs");
        o.path_count = count_or(oj, "path_count", o.path_count, "outputs");
        o.paths_csv = flag_or(oj, "paths_csv", o.paths_csv, "outputs");
        o.prices_csv = flag_or(oj, "prices_csv", o.prices_csv, "outputs");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("config: cannot open " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParameterError("config: " + path.string() + ": " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const json::exception& e) {
        throw ParameterError("config: " + path.string() + ": " + e.what());
    }
}

json config_to_json(const ExperimentConfig& c) {
    json factors = json::array();
    for (const auto& f : c.factors) {
        factors.push_back({{"lambda", f.lambda},
                           {"sigma", step_to_json(f.sigma)},
                           {"y0", f.y0},
                           {"seasonality", step_to_json(f.seasonality)},
                           {"driver",
                            {{"kind", f.driver.kind == DriverKind::GammaProcess ? "gamma"
                                                                                : "compound_poisson"},
                             {"gamma", f.driver.gamma},
                             {"alpha", f.driver.alpha},
                             {"jump_mean_convention", to_string(f.driver.jump_mean_convention)}}}});
    }
    json assets = json::array();
    for (const auto& a : c.assets) {
        json liq{{"kind", to_string(a.liquidity.kind)},
                 {"m", a.liquidity.m},
                 {"n", a.liquidity.n},
                 {"delta", a.liquidity.delta},
                 {"scale", a.liquidity.scale}};
        json aj{{"label", a.label}, {"t1f", a.t1f}, {"t2f", a.t2f}, {"liquidity", liq}};
        if (a.floor_fraction) {
            aj["floor_fraction"] = *a.floor_fraction;
        }
        assets.push_back(aj);
    }
    const auto& s = c.solver;
    json out{
        {"name", c.name},
        {"grid", {{"t_end", c.t_end}, {"n_steps", c.n_steps}}},
        {"model", {{"factors", factors}}},
        {"assets", assets},
        {"hedges", c.hedges},
        {"claim", {{"t1c", c.claim.t1c}, {"t2c", c.claim.t2c}, {"strike", c.claim.strike}}},
        {"solver",
         {{"alpha", s.alpha},
          {"bins_per_dim", s.bins_per_dim},
          {"min_bin_count", s.min_bin_count},
          {"pd_tolerance", s.pd_tolerance},
          {"predictable_tolerance", s.predictable_tolerance},
          {"state", s.state == BinningState::Factors ? "factors" : "prices"},
          {"control", s.control == BinControl::None ? "none" : "claim_average"},
          {"book_value", s.book_value == BookValue::Nested ? "nested" : "pathwise"},
          {"fixed_point", {{"max_iters", s.fixed_point.max_iters}, {"tolerance", s.fixed_point.tolerance}}},
          {"conditions",
           {{"tradeoff_bound", s.conditions.tradeoff_bound},
            {"tradeoff_lower", s.conditions.tradeoff_lower},
            {"f_diagonal_c", s.conditions.f_diagonal_c},
            {"f_diagonal_c_tilde", s.conditions.f_diagonal_c_tilde},
            {"pd_tolerance", s.conditions.pd_tolerance},
            {"covariance",
             s.condition_covariance == ConditionCovariance::Model ? "model" : "sampled"}}}}},
        {"simulation",
         {{"n_paths", c.simulation.n_paths},
          {"seed", c.simulation.seed},
          {"threads", c.simulation.threads}}},
        {"outputs",
         {{"directory", c.outputs.directory},
          {"strategy_paths", c.outputs.strategy_paths},
          {"path_count", c.outputs.path_count},
          {"paths_csv", c.outputs.paths_csv},
          {"prices_csv", c.outputs.prices_csv}}}};
    if (s.conditions.delta) {
        out["solver"]["conditions"]["delta"] = *s.conditions.delta;
    }
    return out;
}

IntegrabilityReport integrability_report(const ExtendedPriceSet& prices,
                                         std::span<const double> payoff) {
    IntegrabilityReport r;
    const std::size_t n = prices.n_paths();
    const double kp = sample_kurtosis(payoff);
    r.payoff_kurtosis = std::isfinite(kp) ? kp : 0.0;
    std::vector<double> ds(n);
    for (std::size_t j = 0; j < prices.n_assets(); ++j) {
        for (std::size_t k = 0; k < prices.maturity_index(j); ++k) {
            for (std::size_t p = 0; p < n; ++p) {
                ds[p] = prices.price(p, k + 1, j) - prices.price(p, k, j);
            }
            const double kurt = sample_kurtosis(ds);
            if (std::isfinite(kurt) && kurt > r.max_increment_kurtosis) {
                r.max_increment_kurtosis = kurt;
                r.worst_k = k;
                r.worst_asset = prices.assets()[j].label;
            }
        }
    }
    const double worst = std::max(r.max_increment_kurtosis, r.payoff_kurtosis);
    r.variance_relative_se = std::sqrt(std::max(0.0, worst - 1.0) / static_cast<double>(n));
    return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentResult res;
    res.config = config;
    if (config.simulation.n_paths < 1000) {
        res.warnings.push_back("fewer than 1000 paths; criteria are noisy");
    }
    const TimeGrid grid(config.t_end, config.n_steps);
    const std::size_t threads = config.simulation.threads;
    const PathSet paths = simulate_paths(config.factors, grid, config.simulation.n_paths,
                                         config.simulation.seed, threads);
    res.paths_checksum = paths.checksum();
    const auto payoff =
        asian_call_payoff(paths, grid, config.claim.t1c, config.claim.t2c, config.claim.strike);
    res.payoff = estimate(payoff);

    for (const auto& labels : config.hedges) {
        HedgeOutcome h;
        h.label = hedge_label(labels);
        const auto selected = select_assets(config, labels);
        for (const auto& a : selected) {
            h.assets.push_back(a.label);
        }
        const ExtendedPriceSet prices =
            build_extended_prices(paths, grid, config.factors, selected, threads);
        const auto builder = make_partition_builder(config, paths, prices);
        h.integrability = integrability_report(prices, payoff);
        if (h.integrability.variance_relative_se > kIntegrabilityWarning) {
            char buf[200];
            std::snprintf(buf, sizeof buf,
                          "hedge %s: increment kurtosis %.3g (step %zu, %s); full-sample "
                          "variances carry relative error %.2g",
                          h.label.c_str(), h.integrability.max_increment_kurtosis,
                          h.integrability.worst_k, h.integrability.worst_asset.c_str(),
                          h.integrability.variance_relative_se);
            res.warnings.push_back(buf);
        }

        LrmConfig cfg_l{config.solver.alpha, config.solver.pd_tolerance, config.solver.fixed_point,
                        threads, true, config.solver.predictable_tolerance, config.solver.book_value};
        LrmConfig cfg_c = cfg_l;
        cfg_c.alpha = 0.0;
        cfg_c.record_moments = false;

        h.strategy_liquid = backward_induction(prices, payoff, builder, cfg_l);
        const std::uint64_t before = paths.checksum();
        h.strategy_classical = backward_induction(prices, payoff, builder, cfg_c);
        if (paths.checksum() != before || before != res.paths_checksum) {
            throw std::logic_error("strategies were not computed on common paths");
        }
        h.liquid = evaluate_criteria(h.strategy_liquid, prices, payoff, config.solver.alpha);
        h.classical = evaluate_criteria(h.strategy_classical, prices, payoff, config.solver.alpha);
        h.conditions = conditions_for(config, grid, prices.assets(), h.strategy_liquid.moments);
        h.boundedness = report_boundedness_terms(h.strategy_liquid.moments, config.solver.alpha);

        for (const auto* s : {&h.strategy_liquid, &h.strategy_classical}) {
            for (const auto& e : s->events) {
                if (e.kind == "ridge") {
                    ++(s == &h.strategy_liquid ? h.ridge_events_liquid : h.ridge_events_classical);
                } else {
                    h.other_events.push_back(e);
                }
            }
        }
        h.min_bin_occupancy = config.simulation.n_paths;
        for (std::size_t k = 1; k < h.strategy_liquid.bins.size(); ++k) {
            std::vector<std::size_t> counts(h.strategy_liquid.n_bins[k], 0);
            for (auto b : h.strategy_liquid.bins[k]) {
                ++counts[b];
            }
            for (auto c : counts) {
                if (c > 0) {
                    h.min_bin_occupancy = std::min(h.min_bin_occupancy, c);
                    h.max_bin_occupancy = std::max(h.max_bin_occupancy, c);
                }
            }
        }
        res.hedges.push_back(std::move(h));
    }
    return res;
}

ConditionReport conditions_for(const ExperimentConfig& config, const TimeGrid& grid,
                               std::span<const FuturesSpec> assets,
                               std::span<const StepMoments> moments) {
    if (config.solver.condition_covariance == ConditionCovariance::Sampled) {
        return run_conditions(moments, config.solver.alpha, config.solver.conditions);
    }
    const auto model = [&](std::size_t k, std::span<const std::size_t> active) {
        return model_increment_covariance(k, grid, config.factors, assets, active);
    };
    return run_conditions(with_model_covariance(moments, model), config.solver.alpha,
                          config.solver.conditions);
}

ConditionCheckResult run_condition_check(const ExperimentConfig& config) {
    config.validate();
    const TimeGrid grid(config.t_end, config.n_steps);
    const PathSet paths = simulate_paths(config.factors, grid, config.simulation.n_paths,
                                         config.simulation.seed, config.simulation.threads);
    ConditionCheckResult out;
    out.paths_checksum = paths.checksum();
    for (const auto& labels : config.hedges) {
        const auto prices = build_extended_prices(paths, grid, config.factors,
                                                  select_assets(config, labels),
                                                  config.simulation.threads);
        const auto moments =
            estimate_price_moments(prices, make_partition_builder(config, paths, prices), config.simulation.threads);
        out.hedges.push_back(hedge_label(labels));
        out.reports.push_back(conditions_for(config, grid, prices.assets(), moments));
    }
    return out;
}

bool OracleSuiteReport::all_pass() const {
    return std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.pass; });
}

std::filesystem::path output_directory(const ExperimentConfig& config) {
    const char* env = std::getenv(kOutputDirEnv);
    if (env != nullptr && *env != '\0') {
        return env;
    }
    return config.outputs.directory;
}

json to_json(const ConditionReport& report) {
    json checks = json::array();
    for (const auto& c : report.checks) {
        json per_step = json::array();
        for (double v : c.per_step) {
            per_step.push_back(std::isnan(v) ? json() : json(v));
        }
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"worst", std::isnan(c.worst) ? json() : json(c.worst)},
                          {"threshold", c.threshold},
                          {"evaluated", c.evaluated},
                          {"degenerate", c.degenerate},
                          {"worst_step", c.worst_k},
                          {"worst_bin", c.worst_bin},
                          {"note", c.note},
                          {"per_step", per_step}});
    }
    return json{{"all_pass", report.all_pass()}, {"checks", checks}};
}

json to_json(const OracleSuiteReport& report) {
    json cases = json::array();
    for (const auto& c : report.cases) {
        cases.push_back(
            {{"name", c.name}, {"pass", c.pass}, {"max_error", c.max_error}, {"detail", c.detail}});
    }
    return json{{"all_pass", report.all_pass()}, {"cases", cases}};
}

std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& res,
                                                   const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto& cfg = res.config;

    std::string csv = criteria_csv_header() + "\n";
    for (const auto& h : res.hedges) {
        csv += criteria_csv_row(h.label, h.liquid, h.classical) + "\n";
    }
    write_file(dir / "criteria.csv", csv);
    written.push_back(dir / "criteria.csv");

    if (cfg.outputs.strategy_paths) {
        const TimeGrid grid(cfg.t_end, cfg.n_steps);
        std::ostringstream sp;
        sp << "hedge,path,k,time,asset,x_L,x_C\n";
        for (const auto& h : res.hedges) {
            const auto& sl = h.strategy_liquid;
            const auto& sc = h.strategy_classical;
            const std::size_t np = std::min(cfg.outputs.path_count, sl.n_paths);
            for (std::size_t p = 0; p < np; ++p) {
                for (std::size_t k = 0; k <= sl.n_steps; ++k) {
                    for (std::size_t j = 0; j < sl.n_assets; ++j) {
                        sp << '"' << h.label << "\"," << p << ',' << k << ',' << g17(grid.time(k))
                           << ',' << h.assets[j] << ',' << g17(sl.x(p, k, j)) << ','
                           << g17(sc.x(p, k, j)) << '\n';
                    }
                }
            }
        }
        write_file(dir / "strategy_paths.csv", sp.str());
        written.push_back(dir / "strategy_paths.csv");
    }

    json hedges = json::array();
    for (const auto& h : res.hedges) {
        json events = json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(h.other_events.size(), 100); ++i) {
            const auto& e = h.other_events[i];
            events.push_back({{"step", e.k}, {"bin", e.bin}, {"kind", e.kind}, {"value", e.value}});
        }
        hedges.push_back(
            {{"hedge", h.label},
             {"assets", h.assets},
             {"criteria_liquid", criteria_json(h.liquid)},
             {"criteria_classical", criteria_json(h.classical)},
             {"conditions", to_json(h.conditions)},
             {"boundedness",
              {{"max_alpha", h.boundedness.max_alpha},
               {"max_beta", h.boundedness.max_beta},
               {"max_alpha_eps", h.boundedness.max_alpha_eps},
               {"max_beta_eps", h.boundedness.max_beta_eps},
               {"evaluated", h.boundedness.evaluated},
               {"skipped_singular", h.boundedness.skipped_singular}}},
             {"ridge_events_liquid", h.ridge_events_liquid},
             {"ridge_events_classical", h.ridge_events_classical},
             {"other_event_count", h.other_events.size()},
             {"other_events", events},
             {"bin_occupancy", {{"min", h.min_bin_occupancy}, {"max", h.max_bin_occupancy}}},
             {"integrability",
              {{"payoff_kurtosis", h.integrability.payoff_kurtosis},
               {"max_increment_kurtosis", h.integrability.max_increment_kurtosis},
               {"worst_step", h.integrability.worst_k},
               {"worst_asset", h.integrability.worst_asset},
               {"variance_relative_se", h.integrability.variance_relative_se}}}});
    }
    json diag{{"payoff_mean", estimate_json(res.payoff)},
              {"warnings", res.warnings},
              {"hedges", hedges}};
    write_file(dir / "diagnostics.json", diag.dump(2) + "\n");
    written.push_back(dir / "diagnostics.json");

    json manifest{{"version", kVersion},
                  {"seed", cfg.simulation.seed},
                  {"paths_checksum", hex(res.paths_checksum)},
                  {"config", manifest_config(cfg)},
                  {"artifacts", json::array()}};
    for (const auto& p : written) {
        manifest["artifacts"].push_back(p.filename().string());
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    written.push_back(dir / "manifest.json");
    return written;
}

std::vector<std::filesystem::path> write_condition_artifacts(const ExperimentConfig& config,
                                                             const ConditionCheckResult& result,
                                                             const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json hedges = json::array();
    for (std::size_t i = 0; i < result.hedges.size(); ++i) {
        hedges.push_back({{"hedge", result.hedges[i]}, {"conditions", to_json(result.reports[i])}});
    }
    json out{{"version", kVersion},
             {"paths_checksum", hex(result.paths_checksum)},
             {"config", manifest_config(config)},
             {"hedges", hedges}};
    write_file(dir / "conditions.json", out.dump(2) + "\n");
    return {dir / "conditions.json"};
}

std::vector<std::filesystem::path> write_path_dump(const ExperimentConfig& config,
                                                   const std::filesystem::path& dir) {
    config.validate();
    std::filesystem::create_directories(dir);
    const TimeGrid grid(config.t_end, config.n_steps);
    const std::size_t np = std::min(config.outputs.path_count, config.simulation.n_paths);
    // Per-path streams make the first np paths identical to those of a full run.
    const PathSet paths =
        simulate_paths(config.factors, grid, np, config.simulation.seed, config.simulation.threads);
    std::ostringstream ps;
    ps << "path,k,time";
    for (std::size_t i = 0; i < paths.n_factors(); ++i) {
        ps << ",Y" << (i + 1);
    }
    ps << ",spot\n";
    for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t k = 0; k < grid.n_points(); ++k) {
            ps << p << ',' << k << ',' << g17(grid.time(k));
            for (std::size_t i = 0; i < paths.n_factors(); ++i) {
                ps << ',' << g17(paths.factor(p, k, i));
            }
            ps << ',' << g17(paths.spot(p, k)) << '\n';
        }
    }
    std::vector<std::filesystem::path> written{dir / "paths.csv"};
    write_file(written.back(), ps.str());

    const auto prices = build_extended_prices(paths, grid, config.factors, config.assets, 1);
    std::ostringstream fs;
    fs << "path,k,time,asset,price\n";
    for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t k = 0; k < grid.n_points(); ++k) {
            for (std::size_t j = 0; j < prices.n_assets(); ++j) {
                fs << p << ',' << k << ',' << g17(grid.time(k)) << ',' << prices.assets()[j].label
                   << ',' << g17(prices.price(p, k, j)) << '\n';
            }
        }
    }
    written.push_back(dir / "prices.csv");
    write_file(written.back(), fs.str());
    return written;
}

}  // namespace lrm
