#include <chrono>
#include <clocale>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bubblelab/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitResidual = 4;

void print_report(const bubblelab::RunReport& report, double wall_ms) {
    std::cout << "model=" << report.model;
    if (!report.verdict.empty()) std::cout << " verdict=" << report.verdict;
    for (const auto& [key, value] : report.scalars)
        std::cout << ' ' << key << '=' << value;
    std::cout << " residual_max=" << bubblelab::format_double(report.residual_max);
    for (const auto& file : report.files) std::cout << "\n  wrote " << file;
    std::cout << "\n  wall_ms=" << wall_ms << '\n';
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const bubblelab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const bubblelab::ResidualError& e) {
        std::cerr << "residual error: " << e.what() << '\n';
        return kExitResidual;
    } catch (const bubblelab::SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"bubblelab: deterministic rational-bubble model laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;

    auto* run_cmd = app.add_subcommand("run", "run one scenario from a config file");
    run_cmd->add_option("config", config_path, "scenario config file")->required();
    run_cmd->add_option("--output", output_override, "override the output directory");

    auto* sweep_cmd =
        app.add_subcommand("sweep", "run a grid of scenarios from a config file");
    sweep_cmd->add_option("config", config_path, "sweep config file")->required();
    sweep_cmd->add_option("--output", output_override, "override the output directory");

    std::string prices_path, dividends_path, detect_output;
    double margin = bubblelab::kDetectorMargin;
    auto* detect_cmd = app.add_subcommand(
        "detect", "classify a price/dividend CSV pair as bubbly or fundamental");
    detect_cmd->add_option("--prices", prices_path, "prices CSV (t,value)")->required();
    detect_cmd->add_option("--dividends", dividends_path, "dividends CSV (t,value)")
        ->required();
    detect_cmd->add_option("--margin", margin, "knife-edge margin around ratio 1");
    detect_cmd->add_option("--output", detect_output, "directory for the verdict record");

    CLI11_PARSE(app, argc, argv);

    if (run_cmd->parsed()) {
        return run_guarded([&] {
            auto config = bubblelab::parse_config_file(config_path);
            if (!output_override.empty()) config.output = output_override;
            const auto start = std::chrono::steady_clock::now();
            const auto report = bubblelab::run_scenario(config);
            const double wall_ms =
                std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
            print_report(report, wall_ms);
            return report.ok ? kExitOk : kExitResidual;
        });
    }
    if (sweep_cmd->parsed()) {
        return run_guarded([&] {
            auto config = bubblelab::parse_config_file(config_path);
            if (!output_override.empty()) config.output = output_override;
            const auto start = std::chrono::steady_clock::now();
            const auto report = bubblelab::sweep(config);
            const double wall_ms =
                std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
            std::cout << "sweep cells=" << report.cells
                      << " failures=" << report.failures;
            for (const auto& file : report.files) std::cout << "\n  wrote " << file;
            std::cout << "\n  wall_ms=" << wall_ms << '\n';
            return kExitOk;
        });
    }
    return run_guarded([&] {
        if (detect_output.empty()) {
            // Verdict to stdout only; no files written.
            const auto prices = bubblelab::TrendedPath::from_values(
                bubblelab::read_series_csv(prices_path));
            const auto dividends = bubblelab::TrendedPath::from_values(
                bubblelab::read_series_csv(dividends_path));
            const auto verdict = bubblelab::detect_bubble(prices, dividends, margin);
            std::cout << "class=" << bubblelab::to_string(verdict.cls)
                      << " partial_sum=" << bubblelab::format_double(verdict.partial_sum)
                      << " tail_ratio=" << bubblelab::format_double(verdict.tail_ratio)
                      << " tail_bound=" << bubblelab::format_double(verdict.tail_bound)
                      << '\n';
            return kExitOk;
        }
        bubblelab::ScenarioConfig config;
        config.model = "detect";
        config.values["prices_csv"] = prices_path;
        config.values["dividends_csv"] = dividends_path;
        config.values["margin"] = bubblelab::format_double(margin);
        config.output = detect_output;
        const auto report = bubblelab::run_scenario(config);
        print_report(report, 0.0);
        return kExitOk;
    });
}
