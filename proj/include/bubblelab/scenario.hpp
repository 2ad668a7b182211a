#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "bubblelab/closed_form.hpp"
#include "bubblelab/core.hpp"
#include "bubblelab/csv.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/pricing.hpp"
#include "bubblelab/saddle.hpp"
#include "bubblelab/stock_land.hpp"

namespace bubblelab {

// ---------------------------------------------------------------------------
// Scenario configuration: flat `key = value` text, one scenario per file.
// Unknown keys are rejected against the chosen model's key table.
// ---------------------------------------------------------------------------

struct ScenarioConfig {
    std::string model;
    std::map<std::string, std::string> values;
    std::filesystem::path output = "out";
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct ModelKeys {
    std::set<std::string> required;
    std::set<std::string> optional;
};

inline const std::map<std::string, ModelKeys>& model_keys() {
    static const std::map<std::string, ModelKeys> keys{
        {"log_olg", {{"beta", "a", "G", "D", "Gd"}, {"horizon", "margin"}}},
        {"wilson", {{"beta", "G", "Gd", "a", "D"}, {"b", "horizon", "margin"}}},
        {"bewley_money", {{"a", "b", "beta", "gamma"}, {}}},
        {"bewley_growth", {{"beta", "gamma", "G", "a", "b", "D"}, {"horizon", "margin"}}},
        {"saddle_fundamental",
         {{"beta", "G", "Gd", "a", "b", "D"},
          {"eps", "horizon", "margin", "t0", "tube_radius"}}},
        {"saddle_bubbly",
         {{"beta", "G", "Gd", "a", "b", "D"},
          {"eps", "horizon", "margin", "t0", "tube_radius"}}},
        {"regime_map",
         {{"beta", "G", "Gd", "a", "D", "w_min", "w_max", "w_step"}, {"eps"}}},
        {"two_sector",
         {{"alpha", "sigma", "K0", "L0", "D0", "GK", "GL", "GX", "N", "X", "beta"},
          {"horizon", "margin", "theta"}}},
        {"firm_shares", {{"R", "C", "S0", "Gs", "p0"}, {"horizon", "margin"}}},
        {"detect", {{"prices_csv", "dividends_csv"}, {"margin"}}},
    };
    return keys;
}

}  // namespace detail

inline ScenarioConfig parse_config_text(const std::string& text) {
    ScenarioConfig config;
    std::istringstream in(text);
    std::string line;
    std::set<std::string> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not `key = value`: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) +
                              " has an empty key or value");
        if (!seen.insert(key).second)
            throw ConfigError("duplicate config key: " + key);
        if (key == "model")
            config.model = value;
        else if (key == "output")
            config.output = value;
        else
            config.values[key] = value;
    }
    if (config.model.empty()) throw ConfigError("config is missing required key: model");
    return config;
}

inline ScenarioConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

namespace detail {

inline void validate_keys(const ScenarioConfig& config) {
    const auto it = model_keys().find(config.model);
    if (it == model_keys().end())
        throw ConfigError("unknown model: " + config.model);
    for (const auto& [key, value] : config.values) {
        if (!it->second.required.count(key) && !it->second.optional.count(key))
            throw ConfigError("unknown key for model " + config.model + ": " + key);
    }
    for (const auto& key : it->second.required)
        if (!config.values.count(key))
            throw ConfigError("model " + config.model + " is missing required key: " + key);
}

inline double num(const ScenarioConfig& config, const std::string& key) {
    const auto it = config.values.find(key);
    if (it == config.values.end())
        throw ConfigError("missing config key: " + key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw ConfigError("config key " + key + " is not a number: " + it->second);
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a number: " + it->second);
    }
}

inline double num_or(const ScenarioConfig& config, const std::string& key,
                     double fallback) {
    return config.values.count(key) ? num(config, key) : fallback;
}

inline std::size_t horizon_of(const ScenarioConfig& config) {
    const double h = num_or(config, "horizon", 400.0);
    if (h < 2.0 || h != std::floor(h))
        throw ConfigError("horizon must be an integer >= 2");
    return std::size_t(h);
}

inline std::vector<double> raw_values(const TrendedPath& path) {
    std::vector<double> out(path.levels.size());
    double scale = 1.0;
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t] = path.levels[t] * scale;
        scale *= path.growth;
    }
    return out;
}

inline UtilityKernel kernel_from(const ScenarioConfig& config) {
    const double beta = num(config, "beta");
    if (config.values.count("eps"))
        return UtilityKernel::ces(beta, num(config, "eps"));
    return UtilityKernel::cobb_douglas(beta);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Run report: verdicts and key scalars of one scenario, plus the artifact
// paths written. Wall-clock stays out of the files so outputs are
// byte-identical across runs.
// ---------------------------------------------------------------------------

struct RunReport {
    std::string model;
    std::string verdict;
    std::vector<std::pair<std::string, std::string>> scalars;
    std::vector<std::string> files;
    double residual_max = 0.0;
    bool ok = true;
};

namespace detail {

inline void emit_verdict(const std::filesystem::path& dir, const std::string& name,
                         const BubbleVerdict& verdict, RunReport& report) {
    const auto path = dir / name;
    write_table_csv(path, "class,partial_sum,tail_ratio,tail_bound",
                    {std::string(to_string(verdict.cls)) + "," +
                     format_double(verdict.partial_sum) + "," +
                     format_double(verdict.tail_ratio) + "," +
                     format_double(verdict.tail_bound)});
    report.files.push_back(path.string());
}

inline void emit_series(const std::filesystem::path& dir, const std::string& name,
                        const std::vector<double>& values, RunReport& report) {
    const auto path = dir / name;
    write_series_csv(path, values);
    report.files.push_back(path.string());
}

inline void emit_summary(const std::filesystem::path& dir, const RunReport& report) {
    std::vector<std::string> rows;
    rows.push_back("model," + report.model);
    if (!report.verdict.empty()) rows.push_back("verdict," + report.verdict);
    for (const auto& [key, value] : report.scalars) rows.push_back(key + "," + value);
    write_table_csv(dir / "summary.csv", "key,value", rows);
}

inline void add_scalar(RunReport& report, const std::string& key, double value) {
    report.scalars.emplace_back(key, format_double(value));
}

inline BubbleVerdict read_verdict_class(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open verdict CSV: " + path.string());
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    BubbleVerdict v;
    const auto comma = row.find(',');
    const std::string cls = row.substr(0, comma);
    if (cls == "fundamental")
        v.cls = BubbleClass::Fundamental;
    else if (cls == "bubbly")
        v.cls = BubbleClass::Bubbly;
    else
        v.cls = BubbleClass::Inconclusive;
    return v;
}

}  // namespace detail

inline RunReport run_scenario(const ScenarioConfig& config) {
    using namespace detail;
    validate_keys(config);
    std::filesystem::create_directories(config.output);

    RunReport report;
    report.model = config.model;
    const double margin = num_or(config, "margin", kDetectorMargin);
    const auto& dir = config.output;

    if (config.model == "log_olg") {
        const std::size_t T = horizon_of(config);
        const auto a = TrendedPath::geometric(num(config, "a"), num(config, "G"), T);
        const auto D = TrendedPath::geometric(num(config, "D"), num(config, "Gd"), T);
        const auto sol = solve_log_olg(a, D, num(config, "beta"), margin);
        report.verdict = to_string(sol.verdict.cls);
        add_scalar(report, "P0", sol.prices.value(0));
        add_scalar(report, "tail_ratio", sol.verdict.tail_ratio);
        emit_series(dir, "prices.csv", raw_values(sol.prices), report);
        emit_series(dir, "dividends.csv", raw_values(D), report);
        emit_verdict(dir, "verdict.csv", sol.verdict, report);
    } else if (config.model == "wilson") {
        const std::size_t T = horizon_of(config);
        const auto sol =
            solve_wilson(num(config, "a"), num_or(config, "b", 0.0), num(config, "G"),
                         num(config, "D"), num(config, "Gd"), num(config, "beta"), T,
                         margin);
        report.verdict = to_string(sol.verdict.cls);
        add_scalar(report, "P0", sol.prices.value(0));
        add_scalar(report, "tail_ratio", sol.verdict.tail_ratio);
        emit_series(dir, "prices.csv", raw_values(sol.prices), report);
        emit_series(dir, "dividends.csv", raw_values(sol.dividends), report);
        emit_series(dir, "rates.csv", sol.rates, report);
        emit_verdict(dir, "verdict.csv", sol.verdict, report);
    } else if (config.model == "bewley_money") {
        const CRRAPeriodUtility u(num(config, "gamma"));
        const auto sol = solve_bewley_money(num(config, "a"), num(config, "b"),
                                            num(config, "beta"), u);
        add_scalar(report, "P", sol.P);
        add_scalar(report, "euler_residual", sol.euler_residual);
        add_scalar(report, "euler_slack", sol.euler_slack);
        report.residual_max = sol.euler_residual;
    } else if (config.model == "bewley_growth") {
        const std::size_t T = horizon_of(config);
        const BewleySpec spec(num(config, "beta"), num(config, "gamma"),
                              num(config, "G"), num(config, "a"), num(config, "b"),
                              num(config, "D"));
        const auto sol = solve_bewley_growth(spec, T, margin);
        report.verdict = to_string(sol.verdict.cls);
        add_scalar(report, "p", sol.p);
        add_scalar(report, "fundamental", sol.fundamental);
        add_scalar(report, "contraction_factor", sol.contraction_factor);
        report.residual_max = sol.rich_euler_residual;
        emit_series(dir, "prices.csv", raw_values(sol.prices), report);
        emit_series(dir, "dividends.csv", raw_values(sol.dividends), report);
        emit_verdict(dir, "verdict.csv", sol.verdict, report);
    } else if (config.model == "saddle_fundamental" || config.model == "saddle_bubbly") {
        const std::size_t T = horizon_of(config);
        const GrowthEconomy econ(num(config, "a"), num(config, "b"), num(config, "G"),
                                 num(config, "D"), num(config, "Gd"));
        const DetrendedSystem system{config.model == "saddle_fundamental"
                                         ? Variant::Fundamental
                                         : Variant::Bubbly,
                                     econ, kernel_from(config)};
        StablePathOptions options;
        if (config.values.count("t0")) options.t0 = int(num(config, "t0"));
        if (config.values.count("tube_radius"))
            options.tube_radius = num(config, "tube_radius");
        const auto path = stable_path(system, T, options);
        const auto verdict = detect_bubble(path.prices, path.dividends, margin);
        report.verdict = to_string(verdict.cls);
        add_scalar(report, "xi1_star", path.report.xi1_star);
        add_scalar(report, "lambda1", path.report.lambda1);
        add_scalar(report, "lambda2", path.report.lambda2);
        add_scalar(report, "slope", path.report.slope);
        add_scalar(report, "t0", double(path.t0));
        emit_series(dir, "prices.csv", raw_values(path.prices), report);
        emit_series(dir, "dividends.csv", raw_values(path.dividends), report);
        std::vector<std::string> rows;
        rows.reserve(path.states.size());
        for (std::size_t t = 0; t < path.states.size(); ++t)
            rows.push_back(std::to_string(t) + "," + format_double(path.states[t].xi1) +
                           "," + format_double(path.states[t].xi2));
        write_table_csv(dir / "xi_path.csv", "t,xi1,xi2", rows);
        report.files.push_back((dir / "xi_path.csv").string());
        emit_verdict(dir, "verdict.csv", verdict, report);
    } else if (config.model == "regime_map") {
        const auto kernel = kernel_from(config);
        const double a = num(config, "a");
        const double G = num(config, "G");
        const double Gd = num(config, "Gd");
        const double D = num(config, "D");
        const double w_min = num(config, "w_min");
        const double w_max = num(config, "w_max");
        const double w_step = num(config, "w_step");
        if (!(w_min > 0.0) || !(w_step > 0.0) || w_max < w_min)
            throw ConfigError("regime_map needs 0 < w_min <= w_max and w_step > 0");
        const int cells = int(std::floor((w_max - w_min) / w_step + 0.5)) + 1;
        std::vector<std::string> rows;
        for (int i = 0; i < cells; ++i) {
            const double w = w_min + double(i) * w_step;
            const GrowthEconomy econ(a, w * a, G, D, Gd);
            const auto regime = classify_regime(econ, kernel);
            const auto fund = steady_state({Variant::Fundamental, econ, kernel});
            const auto bub = steady_state({Variant::Bubbly, econ, kernel});
            const double lambda1_fund = mrs_ratio(kernel, a, G * w * a) / Gd;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            const double lambda1_bub =
                bub.exists && !bub.singular_d ? bub.n_value / bub.d_value : nan;
            rows.push_back(format_double(w) + "," + format_double(G) + "," +
                           format_double(Gd) + "," + format_double(regime.w_f_star) +
                           "," + format_double(regime.w_b_star) + "," +
                           to_string(regime.regime) + "," +
                           format_double(fund.exists ? fund.xi1_star : nan) + "," +
                           format_double(bub.exists ? bub.xi1_star : nan) + "," +
                           format_double(lambda1_fund) + "," +
                           format_double(lambda1_bub));
        }
        write_table_csv(dir / "regime_map.csv",
                        "w,G,Gd,w_f_star,w_b_star,regime,xi1_fund,xi1_bub,"
                        "lambda1_fund,lambda1_bub",
                        rows);
        report.files.push_back((dir / "regime_map.csv").string());
        add_scalar(report, "cells", double(cells));
        add_scalar(report, "w_f_star", threshold_w(kernel, G, Gd));
        add_scalar(report, "w_b_star", threshold_w(kernel, G, G));
    } else if (config.model == "two_sector") {
        const std::size_t T = horizon_of(config);
        TwoSectorEconomy econ{};
        econ.alpha = num(config, "alpha");
        econ.sigma = num(config, "sigma");
        econ.K0 = num(config, "K0");
        econ.L0 = num(config, "L0");
        econ.D0 = num(config, "D0");
        econ.GK = num(config, "GK");
        econ.GL = num(config, "GL");
        econ.GX = num(config, "GX");
        econ.N = num(config, "N");
        econ.X = num(config, "X");
        econ.beta = num(config, "beta");
        const auto sim = simulate_aggregate(econ, T);
        const auto verdicts = classify_two_sector(econ, T, margin);
        report.verdict = to_string(verdicts.numeric.cls);
        report.scalars.emplace_back("analytic", to_string(verdicts.analytic));
        const double theta = num_or(config, "theta", 0.5);
        // The theta split needs asymptotically geometric discounted flows;
        // deep in the no-bubble region it is unavailable and the columns
        // degrade to nan while the classification stands.
        BubbleDecomposition dec;
        bool have_decomposition = true;
        try {
            dec = decompose_bubble(sim, theta);
        } catch (const SolverError&) {
            have_decomposition = false;
        } catch (const ResidualError&) {
            have_decomposition = false;
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (have_decomposition) {
            report.residual_max = dec.max_noarb_residual;
            add_scalar(report, "B0", dec.B[0]);
        } else {
            report.scalars.emplace_back("decomposition", "unavailable");
        }
        add_scalar(report, "theta", theta);
        std::vector<std::string> rows;
        for (std::size_t t = 0; t <= T; ++t) {
            const double R = t < T ? sim.rates[t] : nan;
            rows.push_back(std::to_string(t) + "," + format_double(sim.S.value(t)) +
                           "," + format_double(sim.E.value(t)) + "," +
                           format_double(R) + "," + format_double(sim.ladder.q[t]) +
                           "," + format_double(have_decomposition ? dec.VS[t] : nan) +
                           "," + format_double(have_decomposition ? dec.VL[t] : nan) +
                           "," + format_double(have_decomposition ? dec.B[t] : nan) +
                           "," + format_double(have_decomposition ? dec.Q[t] : nan) +
                           "," + format_double(have_decomposition ? dec.P[t] : nan));
        }
        write_table_csv(dir / "aggregate.csv", "t,S,E,R,q,VS,VL,B,Q,P", rows);
        report.files.push_back((dir / "aggregate.csv").string());
        emit_series(dir, "prices.csv", raw_values(sim.S), report);
        emit_series(dir, "dividends.csv", raw_values(sim.E), report);
        emit_verdict(dir, "verdict.csv", verdicts.numeric, report);
    } else if (config.model == "firm_shares") {
        const std::size_t T = horizon_of(config);
        const double R = num(config, "R");
        const double C = num(config, "C");
        const double S0 = num(config, "S0");
        const double Gs = num(config, "Gs");
        std::vector<double> shares(T + 1), cash(T, C), rates(T, R);
        double s = S0;
        for (std::size_t t = 0; t <= T; ++t) {
            shares[t] = s;
            s *= Gs;
        }
        const auto fs = firm_accounting(shares, cash, rates, num(config, "p0"));
        const auto fb = classify_firm_bubbles(fs, margin);
        report.verdict = std::string(to_string(fb.stock.cls)) + "/" +
                         to_string(fb.value.cls);
        report.scalars.emplace_back("stock_verdict", to_string(fb.stock.cls));
        report.scalars.emplace_back("value_verdict", to_string(fb.value.cls));
        report.scalars.emplace_back("share_trend", to_string(fb.share_trend));
        report.residual_max = fs.max_accounting_residual;
        std::vector<std::string> rows;
        for (std::size_t t = 0; t <= T; ++t) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            rows.push_back(std::to_string(t) + "," + format_double(fs.shares[t]) + "," +
                           format_double(t > 0 ? fs.cashflow[t - 1] : nan) + "," +
                           format_double(fs.price[t]) + "," +
                           format_double(t > 0 ? fs.dividend[t - 1] : nan) + "," +
                           format_double(fs.firm_value[t]));
        }
        write_table_csv(dir / "firm.csv", "t,S,C,p,d,P", rows);
        report.files.push_back((dir / "firm.csv").string());
        std::vector<double> d_full(T + 1, 0.0), c_full(T + 1, 0.0);
        std::copy(fs.dividend.begin(), fs.dividend.end(), d_full.begin() + 1);
        std::copy(fs.cashflow.begin(), fs.cashflow.end(), c_full.begin() + 1);
        emit_series(dir, "stock_prices.csv", fs.price, report);
        emit_series(dir, "stock_dividends.csv", d_full, report);
        emit_series(dir, "value_prices.csv", fs.firm_value, report);
        emit_series(dir, "value_cashflows.csv", c_full, report);
        emit_verdict(dir, "stock_verdict.csv", fb.stock, report);
        emit_verdict(dir, "value_verdict.csv", fb.value, report);
    } else if (config.model == "detect") {
        const auto prices =
            TrendedPath::from_values(read_series_csv(config.values.at("prices_csv")));
        const auto dividends = TrendedPath::from_values(
            read_series_csv(config.values.at("dividends_csv")));
        const auto verdict = detect_bubble(prices, dividends, margin);
        report.verdict = to_string(verdict.cls);
        add_scalar(report, "partial_sum", verdict.partial_sum);
        add_scalar(report, "tail_ratio", verdict.tail_ratio);
        add_scalar(report, "tail_bound", verdict.tail_bound);
        emit_verdict(dir, "verdict.csv", verdict, report);
    }

    detail::emit_summary(dir, report);
    report.files.push_back((dir / "summary.csv").string());
    return report;
}

// ---------------------------------------------------------------------------
// Parameter sweeps: any numeric value written as `lo:hi:step` or as a
// comma list becomes a grid axis; the cross product runs cell by cell,
// concurrently up to BUBBLELAB_THREADS, and failures are recorded per cell
// without stopping the sweep.
// ---------------------------------------------------------------------------

struct SweepAxis {
    std::string key;
    std::vector<double> values;
};

namespace detail {

inline std::optional<std::vector<double>> parse_axis(const std::string& raw) {
    if (raw.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::istringstream in(raw);
        std::string piece;
        while (std::getline(in, piece, ':')) {
            try {
                parts.push_back(std::stod(piece));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
        if (parts.size() != 3) throw ConfigError("axis must be lo:hi:step, got " + raw);
        const double lo = parts[0], hi = parts[1], step = parts[2];
        if (!(step > 0.0) || hi < lo)
            throw ConfigError("axis must satisfy lo <= hi, step > 0: " + raw);
        const int n = int(std::floor((hi - lo) / step + 0.5)) + 1;
        std::vector<double> values;
        values.reserve(std::size_t(n));
        for (int i = 0; i < n; ++i) values.push_back(lo + double(i) * step);
        return values;
    }
    if (raw.find(',') != std::string::npos) {
        std::vector<double> values;
        std::istringstream in(raw);
        std::string piece;
        while (std::getline(in, piece, ',')) {
            try {
                values.push_back(std::stod(trim(piece)));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
        return values;
    }
    return std::nullopt;
}

inline unsigned sweep_threads() {
    if (const char* env = std::getenv("BUBBLELAB_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return unsigned(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

}  // namespace detail

struct SweepReport {
    std::size_t cells = 0;
    std::size_t failures = 0;
    std::vector<std::string> files;
};

inline SweepReport sweep(const ScenarioConfig& config) {
    using namespace detail;
    std::vector<SweepAxis> axes;
    ScenarioConfig base = config;
    for (const auto& [key, raw] : config.values) {
        if (const auto values = parse_axis(raw)) {
            axes.push_back({key, *values});
            base.values.erase(key);
        }
    }
    std::size_t cells = 1;
    for (const auto& axis : axes) cells *= axis.values.size();
    if (cells == 0) throw ConfigError("sweep axis with no values");

    std::filesystem::create_directories(config.output);

    struct Cell {
        ScenarioConfig config;
        std::vector<double> coords;
        RunReport report;
        std::string error;
    };
    std::vector<Cell> grid(cells);
    for (std::size_t idx = 0; idx < cells; ++idx) {
        Cell& cell = grid[idx];
        cell.config = base;
        std::size_t rest = idx;
        for (const auto& axis : axes) {
            const std::size_t i = rest % axis.values.size();
            rest /= axis.values.size();
            cell.config.values[axis.key] = format_double(axis.values[i]);
            cell.coords.push_back(axis.values[i]);
        }
        char name[16];
        std::snprintf(name, sizeof(name), "cell_%04zu", idx);
        cell.config.output = config.output / "cells" / name;
    }

    const unsigned workers = std::min<std::size_t>(sweep_threads(), cells);
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= cells) return;
            try {
                grid[idx].report = run_scenario(grid[idx].config);
            } catch (const std::exception& e) {
                grid[idx].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
    work();
    for (auto& thread : pool) thread.join();

    SweepReport out;
    out.cells = cells;

    // Aggregate CSV: the two-sector grid carries its dedicated schema,
    // everything else gets the generic axes + verdict table.
    std::vector<std::string> rows;
    std::string header;
    if (config.model == "two_sector") {
        header = "GK,GL,GX,sigma,analytic,numeric";
        for (const auto& cell : grid) {
            const auto field = [&](const std::string& key) {
                return cell.config.values.at(key);
            };
            std::string analytic = "error", numeric = "error";
            if (cell.error.empty()) {
                numeric = cell.report.verdict;
                for (const auto& [k, v] : cell.report.scalars)
                    if (k == "analytic") analytic = v;
            } else {
                ++out.failures;
            }
            rows.push_back(field("GK") + "," + field("GL") + "," + field("GX") + "," +
                           field("sigma") + "," + analytic + "," + numeric);
        }
    } else {
        header = "";
        for (const auto& axis : axes) header += axis.key + ",";
        header += "status,verdict";
        for (const auto& cell : grid) {
            std::string row;
            for (const double c : cell.coords) row += format_double(c) + ",";
            if (cell.error.empty()) {
                row += "ok," + (cell.report.verdict.empty() ? std::string("none")
                                                            : cell.report.verdict);
            } else {
                row += "error,none";
                ++out.failures;
            }
            rows.push_back(row);
        }
    }
    write_table_csv(config.output / "sweep.csv", header, rows);
    out.files.push_back((config.output / "sweep.csv").string());
    return out;
}

}  // namespace bubblelab
