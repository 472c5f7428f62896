// betanmf: beta-divergence NMF toolkit.
//
// Subcommands: factorize (NMF on a CSV/sonar matrix), verify (numeric
// certificate for the divergence kernels), curve (divergence curve samples).
// Exit codes: 0 success, 1 load/config failure, 2 numeric failure,
// 3 verification failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "betanmf/io.hpp"
#include "betanmf/nmf.hpp"
#include "betanmf/verify.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace betanmf;

namespace {

constexpr const char* kOutputDirEnv = "BETANMF_OUTPUT_DIR";

std::string default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv)) return env;
    return "betanmf-out";
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        values.push_back(std::stod(item));
    }
    if (values.empty()) throw std::invalid_argument("empty list: '" + text + "'");
    return values;
}

std::pair<double, double> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("range must be lo:hi, got '" + text + "'");
    }
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("seed range must be a:b, got '" + text + "'");
    }
    const auto a = std::stoull(text.substr(0, colon));
    const auto b = std::stoull(text.substr(colon + 1));
    if (b < a) throw std::invalid_argument("seed range must satisfy a <= b");
    return {a, b};
}

// All outputs are produced with a .partial suffix and renamed only after
// every write succeeded, so an error exit never leaves files that look final.
class OutputStage {
  public:
    explicit OutputStage(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    fs::path stage(const std::string& name) {
        fs::path partial = dir_ / (name + ".partial");
        staged_.emplace_back(partial, dir_ / name);
        return partial;
    }

    void commit() {
        for (const auto& [partial, final_path] : staged_) {
            fs::rename(partial, final_path);
        }
        staged_.clear();
    }

  private:
    fs::path dir_;
    std::vector<std::pair<fs::path, fs::path>> staged_;
};

struct FactorizeArgs {
    std::string input;
    std::string format = "csv";
    std::string delimiter = ",";
    bool header = false;
    bool transpose = false;
    std::int64_t rank = 0;
    std::string algorithm = "mu-beta";
    double beta = 2.0;
    std::string family;
    std::string convention = "standard";
    std::uint64_t seed = 0;
    std::string seeds;
    int max_iters = 1000;
    double tol = 1e-6;
    double eps_floor = kDefaultFloor;
    std::string outdir = default_output_dir();
    std::string trajectory_format = "csv";
};

Convention parse_convention(const std::string& name) {
    if (name == "standard") return Convention::Standard;
    if (name == "flipped") return Convention::FlippedSec4;
    throw std::invalid_argument("convention must be standard or flipped");
}

nmf::Algorithm parse_algorithm(const std::string& name) {
    if (name == "mu-beta") return nmf::Algorithm::MuBeta;
    if (name == "mu-bregman") return nmf::Algorithm::MuBregman;
    if (name == "sbcd") return nmf::Algorithm::Sbcd;
    throw std::invalid_argument("algorithm must be mu-beta, mu-bregman or sbcd");
}

DivergenceSpecd parse_divergence(const FactorizeArgs& args) {
    const BetaParamd beta{args.beta, parse_convention(args.convention)};
    if (args.family.empty()) return beta;
    Family family;
    if (args.family == "A") {
        family = Family::A;
    } else if (args.family == "B") {
        family = Family::B;
    } else if (args.family == "C") {
        family = Family::C;
    } else {
        throw std::invalid_argument("family must be A, B or C");
    }
    return GeneratorFamilyd::from(family, beta);
}

int run_factorize(const FactorizeArgs& args) {
    // full config validation happens before anything touches the filesystem
    if (args.rank < 1) {
        std::cerr << "error: rank must be >= 1 (got " << args.rank << ")\n";
        return 1;
    }
    if (!(args.tol > 0) || !(args.eps_floor > 0) || args.max_iters < 1) {
        std::cerr << "error: tol and eps-floor must be > 0, max-iters >= 1\n";
        return 1;
    }
    if (args.delimiter.size() != 1) {
        std::cerr << "error: delimiter must be a single character\n";
        return 1;
    }
    if (args.trajectory_format != "csv" && args.trajectory_format != "json") {
        std::cerr << "error: trajectory-format must be csv or json\n";
        return 1;
    }
    const nmf::Algorithm algorithm = parse_algorithm(args.algorithm);
    const DivergenceSpecd divergence = parse_divergence(args);
    std::uint64_t seed_lo = args.seed;
    std::uint64_t seed_hi = args.seed;
    if (!args.seeds.empty()) {
        std::tie(seed_lo, seed_hi) = parse_seed_range(args.seeds);
    }
    const bool multi = seed_hi > seed_lo;

    std::vector<std::string> warnings;
    std::optional<io::Dataset> loaded;
    if (args.format == "sonar") {
        loaded = io::load_sonar(args.input, args.eps_floor, &warnings);
    } else if (args.format == "csv") {
        loaded = io::load_csv(args.input, io::CsvOptions{args.delimiter[0],
                                                         args.header,
                                                         args.eps_floor});
    } else {
        std::cerr << "error: format must be csv or sonar\n";
        return 1;
    }
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

    NonNegMatrixd V = args.transpose
                          ? NonNegMatrixd(loaded->matrix.values().transpose(),
                                          args.eps_floor)
                          : loaded->matrix;
    if (args.rank > std::min(V.rows(), V.cols())) {
        std::cerr << "error: rank " << args.rank << " exceeds min(F, N) = "
                  << std::min(V.rows(), V.cols()) << "\n";
        return 1;
    }

    OutputStage stage(args.outdir);
    std::vector<io::TrajectoryRecord> records;
    nlohmann::json run_summaries = nlohmann::json::array();
    for (std::uint64_t seed = seed_lo; seed <= seed_hi; ++seed) {
        nmf::SolverConfig<double> config;
        config.rank = args.rank;
        config.algorithm = algorithm;
        config.divergence = divergence;
        config.max_iters = args.max_iters;
        config.rel_tol = args.tol;
        config.seed = seed;
        config.eps_floor = args.eps_floor;
        const auto report = nmf::solve(V, config);
        if (report.diagnostics.rejected_nonfinite) {
            std::cerr << "numeric failure: objective became non-finite (seed "
                      << seed << ")\n";
            return 2;
        }

        const std::string run = "seed" + std::to_string(seed);
        const std::string w_name = multi ? "W_" + run + ".csv" : "W.csv";
        const std::string h_name = multi ? "H_" + run + ".csv" : "H.csv";
        io::save_csv(report.factors.W, stage.stage(w_name));
        io::save_csv(report.factors.H, stage.stage(h_name));
        records.push_back(io::TrajectoryRecord{run, io::algorithm_name(algorithm),
                                               io::divergence_tag(divergence),
                                               seed, report.trajectory});
        run_summaries.push_back(
            {{"run", run},
             {"seed", seed},
             {"initial_objective", report.trajectory.front().second},
             {"final_objective", report.trajectory.back().second},
             {"iterations", report.iterations_run},
             {"converged", report.converged},
             {"objective_increases", report.diagnostics.objective_increases},
             {"skipped_entries", report.diagnostics.skipped_entries},
             {"W", w_name},
             {"H", h_name}});
    }

    const bool json_traj = args.trajectory_format == "json";
    io::export_trajectory(records,
                          stage.stage(json_traj ? "trajectory.json"
                                                : "trajectory.csv"),
                          json_traj ? io::TrajectoryFormat::Json
                                    : io::TrajectoryFormat::Csv);

    nlohmann::json summary{{"input", args.input},
                           {"format", args.format},
                           {"transpose", args.transpose},
                           {"floor_count", loaded->provenance.floored},
                           {"convention", args.convention},
                           {"divergence", io::divergence_tag(divergence)},
                           {"algorithm", io::algorithm_name(algorithm)},
                           {"rank", args.rank},
                           {"max_iters", args.max_iters},
                           {"rel_tol", args.tol},
                           {"eps_floor", args.eps_floor},
                           {"runs", std::move(run_summaries)}};
    {
        std::ofstream out(stage.stage("summary.json"));
        out << summary.dump(2) << '\n';
        if (!out) throw std::runtime_error("cannot write summary.json");
    }
    stage.commit();
    return 0;
}

int run_verify(const std::string& beta_grid, bool inject_fault) {
    verify::Options opts;
    if (!beta_grid.empty()) opts.beta_grid = parse_list(beta_grid);
    opts.inject_fault = inject_fault;
    const auto results = verify::run_checks(opts);

    std::cout << std::left << std::setw(52) << "check" << std::setw(14)
              << "max err" << std::setw(12) << "tol" << "status\n";
    for (const auto& r : results) {
        std::ostringstream err, tol;
        err << std::scientific << std::setprecision(3) << r.max_err;
        tol << std::scientific << std::setprecision(1) << r.tol;
        std::cout << std::left << std::setw(52) << r.name << std::setw(14)
                  << err.str() << std::setw(12) << tol.str()
                  << (r.pass ? "PASS" : "FAIL") << "\n";
        if (!r.pass) {
            std::cout << "    worst case " << r.worst_case << "\n";
        }
    }
    if (!verify::all_pass(results)) {
        std::cout << "verification FAILED\n";
        return 3;
    }
    std::cout << "all checks passed\n";
    return 0;
}

struct CurveArgs {
    std::string betas;
    std::string range;
    int samples = 100;
    double ref = 1.0;
    std::string convention = "standard";
    std::string order = "point-first";
    std::string output;
};

int run_curve(const CurveArgs& args) {
    const Convention convention = parse_convention(args.convention);
    std::vector<BetaParamd> betas;
    for (double b : parse_list(args.betas)) {
        betas.push_back(BetaParamd{b, convention});
    }
    const auto [lo, hi] = parse_range(args.range);
    io::CurveOrder order;
    if (args.order == "point-first") {
        order = io::CurveOrder::PointFirst;
    } else if (args.order == "ref-first") {
        order = io::CurveOrder::RefFirst;
    } else {
        throw std::invalid_argument("order must be point-first or ref-first");
    }
    const auto points =
        io::curve_data(betas, lo, hi, args.samples, args.ref, order);

    const fs::path out = args.output.empty()
                             ? fs::path(default_output_dir()) / "curve.csv"
                             : fs::path(args.output);
    OutputStage stage(out.parent_path().empty() ? "." : out.parent_path());
    io::save_curve(points, stage.stage(out.filename().string()));
    stage.commit();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beta-divergence NMF toolkit"};
    app.require_subcommand(1);

    FactorizeArgs fargs;
    CLI::App* factorize =
        app.add_subcommand("factorize", "factorize a nonnegative matrix");
    factorize->add_option("--input", fargs.input, "input matrix file")
        ->required();
    factorize->add_option("--format", fargs.format, "csv or sonar");
    factorize->add_option("--delimiter", fargs.delimiter, "CSV delimiter");
    factorize->add_flag("--header", fargs.header, "skip a CSV header line");
    factorize->add_flag("--transpose", fargs.transpose,
                        "factorize the transposed matrix");
    factorize->add_option("--rank,-K", fargs.rank, "factorization rank K")
        ->required();
    factorize->add_option("--algorithm", fargs.algorithm,
                          "mu-beta, mu-bregman or sbcd");
    factorize->add_option("--beta", fargs.beta, "beta parameter");
    factorize->add_option("--family", fargs.family,
                          "Bregman generator family A, B or C");
    factorize->add_option("--convention", fargs.convention,
                          "beta indexing: standard or flipped");
    factorize->add_option("--seed", fargs.seed, "PRNG seed");
    factorize->add_option("--seeds", fargs.seeds,
                          "inclusive seed range a:b (one run per seed)");
    factorize->add_option("--max-iters", fargs.max_iters, "iteration cap");
    factorize->add_option("--tol", fargs.tol, "relative stopping tolerance");
    factorize->add_option("--eps-floor", fargs.eps_floor,
                          "smallest admissible entry");
    factorize->add_option("--output-dir", fargs.outdir,
                          "output directory (default $BETANMF_OUTPUT_DIR)");
    factorize->add_option("--trajectory-format", fargs.trajectory_format,
                          "csv or json");

    std::string verify_beta_grid;
    bool inject_fault = false;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "run the divergence verification grid");
    verify_cmd->add_option("--beta-grid", verify_beta_grid,
                           "comma-separated standard-convention betas");
    verify_cmd->add_flag("--inject-fault", inject_fault,
                         "negative control: perturb a constant so a check fails");

    CurveArgs cargs;
    CLI::App* curve =
        app.add_subcommand("curve", "emit divergence curve samples");
    curve->add_option("--betas", cargs.betas, "comma-separated betas")
        ->required();
    curve->add_option("--range", cargs.range, "sample range lo:hi")->required();
    curve->add_option("--samples", cargs.samples, "samples per curve");
    curve->add_option("--ref", cargs.ref, "fixed reference point");
    curve->add_option("--convention", cargs.convention, "standard or flipped");
    curve->add_option("--order", cargs.order,
                      "point-first: d(point|ref); ref-first: d(ref|point)");
    curve->add_option("--output", cargs.output, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(factorize)) return run_factorize(fargs);
        if (app.got_subcommand(verify_cmd)) {
            return run_verify(verify_beta_grid, inject_fault);
        }
        if (app.got_subcommand(curve)) return run_curve(cargs);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
