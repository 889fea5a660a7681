#include "distreg/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "distreg/errors.hpp"

namespace distreg::cli {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << contents;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string density_csv(const trainer::RunResult& result) {
    std::ostringstream out;
    out << "grid,target_kde,pred_kde\n";
    for (std::size_t i = 0; i < result.kde_grid.size(); ++i)
        out << format_double(result.kde_grid[i]) << ',' << format_double(result.target_density[i])
            << ',' << format_double(result.pred_density[i]) << '\n';
    return out.str();
}

}  // namespace

std::string resolve_out_root(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("DISTREG_OUT"); env && *env) return env;
    return "runs";
}

int cmd_generate(const std::string& kind, std::size_t n, std::uint64_t seed,
                 const std::string& out_path) {
    try {
        data::Dataset ds;
        if (kind == "inverse-square")
            ds = data::gen_inverse_square(n, 0.5, seed);
        else if (kind == "two-path")
            ds = data::gen_two_path(n, 5.0, 0.3, seed);
        else if (kind == "unimodal-linear")
            ds = data::gen_unimodal_linear(n, 3.0, 0.5, seed);
        else
            throw ConfigError("unknown dataset kind '" + kind + "'");
        data::write_csv(out_path, ds);
        std::cout << "wrote " << n << " rows to " << out_path << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    }
}

int cmd_run(const std::string& config_path, const std::string& out_root, bool validate_only) {
    Experiment exp;
    try {
        exp = load_experiment(config_path);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    if (validate_only) {
        std::cout << "ok " << config_hash(exp.run) << "\n";
        return kExitOk;
    }
    try {
        const fs::path dir = fs::path(resolve_out_root(out_root)) / config_hash(exp.run);
        fs::create_directories(dir);
        std::ofstream epoch_stream(dir / "epochs.jsonl");
        if (!epoch_stream) throw IoError("cannot write '" + (dir / "epochs.jsonl").string() + "'");
        const trainer::RunResult result =
            trainer::train(exp.run, [&](const trainer::EpochRecord& rec) {
                epoch_stream << rec.to_json_line() << '\n';
                epoch_stream.flush();
            });
        epoch_stream.close();
        write_file(dir / "report.json", result.report.to_json());
        if (!result.kde_grid.empty()) write_file(dir / "density.csv", density_csv(result));
        std::cout << "run " << result.report.config_hash << " (" << result.report.loss_family
                  << " on " << result.report.dataset << ")\n"
                  << "  rmse=" << result.report.rmse << " w1=" << result.report.wasserstein
                  << " js=" << result.report.js << " delta_bc=" << result.report.delta_bc
                  << (result.report.diverged ? "  [diverged]" : "") << "\n"
                  << "  wall=" << result.report.wall_time_sec << "s -> " << dir.string() << "\n";
        return result.report.diverged ? kExitDiverged : kExitOk;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

int cmd_sweep(const std::string& config_path, const std::string& out_root, std::size_t jobs) {
    Experiment exp;
    try {
        exp = load_experiment(config_path);
        if (!exp.sweep) throw ConfigError(config_path + ": missing [sweep] section");
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        const trainer::SweepResult result = trainer::sweep(exp.run, *exp.sweep, jobs);
        // sweep directory named after the base config hash
        const fs::path dir = fs::path(resolve_out_root(out_root)) /
                             ("sweep-" + config_hash(exp.run));
        fs::create_directories(dir);
        for (const auto& row : result.rows) {
            // per-run artifacts carry full reports; densities are rerunnable
            fs::path run_dir = dir / row.report.config_hash;
            fs::create_directories(run_dir);
            write_file(run_dir / "report.json", row.report.to_json());
        }
        std::ostringstream csv;
        csv << "separation,family,alpha,runs,diverged,median_rmse,mean_rmse,"
               "median_wasserstein,median_js,median_delta_bc,median_test_loss\n";
        for (const auto& agg : result.aggregates) {
            csv << format_double(agg.separation) << ',' << agg.family << ','
                << format_double(agg.alpha) << ',' << agg.runs << ',' << agg.diverged << ','
                << format_double(agg.median_rmse) << ',' << format_double(agg.mean_rmse) << ','
                << format_double(agg.median_wasserstein) << ',' << format_double(agg.median_js)
                << ',' << format_double(agg.median_delta_bc) << ','
                << format_double(agg.median_test_loss) << '\n';
        }
        write_file(dir / "aggregate.csv", csv.str());
        std::size_t diverged = 0;
        for (const auto& row : result.rows) diverged += row.report.diverged ? 1 : 0;
        std::cout << result.rows.size() << " runs (" << diverged << " diverged) -> "
                  << dir.string() << "\n";
        return kExitOk;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
}

int cmd_report(const std::string& dir) {
    try {
        std::vector<trainer::MetricsReport> reports;
        if (!fs::exists(dir)) throw IoError("no such directory: " + dir);
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().filename() != "report.json") continue;
            std::ifstream in(entry.path());
            std::stringstream ss;
            ss << in.rdbuf();
            reports.push_back(trainer::MetricsReport::from_json(ss.str()));
        }
        if (reports.empty()) throw IoError("no report.json files under " + dir);
        std::sort(reports.begin(), reports.end(),
                  [](const auto& a, const auto& b) { return a.config_hash < b.config_hash; });

        // best (lowest) value per metric column, over non-diverged rows
        auto best_of = [&](auto getter) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& r : reports)
                if (!r.diverged) best = std::min(best, getter(r));
            return best;
        };
        const double best_rmse = best_of([](const auto& r) { return r.rmse; });
        const double best_w1 = best_of([](const auto& r) { return r.wasserstein; });
        const double best_js = best_of([](const auto& r) { return r.js; });
        const double best_dbc = best_of([](const auto& r) { return r.delta_bc; });

        auto cell = [](double v, bool best) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%8.4f%s", v, best ? "*" : " ");
            return std::string(buf);
        };
        std::printf("%-16s %-24s %6s %10s %9s %9s %9s %9s\n", "config", "loss", "seed",
                    "test_loss", "rmse", "w1", "js", "delta_bc");
        for (const auto& r : reports) {
            if (r.diverged) {
                std::printf("%-16s %-24s %6llu %10s %9s %9s %9s %9s\n", r.config_hash.c_str(),
                            r.loss_family.c_str(), static_cast<unsigned long long>(r.seed),
                            "diverged", "-", "-", "-", "-");
                continue;
            }
            std::printf("%-16s %-24s %6llu %10.4f %s %s %s %s\n", r.config_hash.c_str(),
                        r.loss_family.c_str(), static_cast<unsigned long long>(r.seed), r.test_loss,
                        cell(r.rmse, r.rmse == best_rmse).c_str(),
                        cell(r.wasserstein, r.wasserstein == best_w1).c_str(),
                        cell(r.js, r.js == best_js).c_str(),
                        cell(r.delta_bc, r.delta_bc == best_dbc).c_str());
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIoError;
    }
}

}  // namespace distreg::cli
