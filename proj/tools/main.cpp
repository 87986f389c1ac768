#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "suites.hpp"
#include "tbm/estimation.hpp"
#include "tbm/io.hpp"
#include "tbm/metrics.hpp"
#include "tbm/selection.hpp"
#include "tbm/simulate.hpp"
#include "tbm/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit-code contract: 0 ok, 2 input parse error, 3 config error,
// 4 internal invariant violation.
constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitConfig = 3;
constexpr int kExitInternal = 4;

struct RunContext {
    std::string command;
    std::vector<std::string> argv;
    std::string out_dir;
    std::uint64_t seed = 0;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();

    std::string out_path(const std::string& name) {
        fs::create_directories(out_dir);
        std::string p = (fs::path(out_dir) / name).string();
        outputs.push_back(p);
        return p;
    }

    void write_manifest(const std::string& error = "") {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        json m{{"command", command},   {"argv", argv},
               {"version", tbm::kVersion}, {"seed", seed},
               {"config", config},     {"inputs", inputs},
               {"outputs", outputs},   {"wall_time_s", wall}};
        if (!error.empty()) m["error"] = error;
        fs::create_directories(out_dir);
        std::ofstream os(fs::path(out_dir) / "manifest.json");
        os << m.dump(2) << '\n';
    }
};

json penalty_json(const tbm::Penalty& p) {
    switch (p.kind) {
        case tbm::PenaltyKind::none:
            return {{"kind", "none"}};
        case tbm::PenaltyKind::l0:
            return {{"kind", "l0"}, {"lambda", p.lambda}};
        case tbm::PenaltyKind::l1:
            return {{"kind", "l1"}, {"lambda", p.lambda}};
    }
    return {};
}

tbm::Penalty make_penalty(const std::string& kind, double lambda) {
    if (kind == "none") return tbm::Penalty::none();
    if (kind == "l0") return tbm::Penalty::l0(lambda);
    if (kind == "l1") return tbm::Penalty::l1(lambda);
    throw std::invalid_argument("--penalty must be one of none, l0, l1");
}

std::vector<std::pair<std::size_t, std::size_t>> parse_rank_ranges(
    const std::vector<std::string>& specs) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (const std::string& s : specs) {
        const std::size_t colon = s.find(':');
        try {
            if (colon == std::string::npos) {
                const std::size_t v = std::stoul(s);
                ranges.emplace_back(v, v);
            } else {
                ranges.emplace_back(std::stoul(s.substr(0, colon)),
                                    std::stoul(s.substr(colon + 1)));
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("--ranks-grid entry '" + s +
                                        "' is not lo:hi or a single value");
        }
    }
    return ranges;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << text;
}

std::string csv_escape_none(double v) { return tbm::format_double(v); }

// ------------------------------- simulate ---------------------------------

struct SimulateArgs {
    std::vector<std::size_t> dims, ranks;
    std::string noise = "gaussian";
    double sigma = 1.0;
    double sparsity = 0.0;
    std::string scheme = "balanced";
    std::size_t min_size = 1;
    std::uint64_t seed = 0;
    std::string out;
};

int run_simulate(RunContext& ctx, const SimulateArgs& args) {
    tbm::SimConfig cfg;
    cfg.dims = args.dims;
    cfg.ranks = args.ranks;
    cfg.noise = args.noise == "bernoulli" ? tbm::NoiseKind::bernoulli
                                          : tbm::NoiseKind::gaussian;
    if (args.noise != "gaussian" && args.noise != "bernoulli") {
        throw std::invalid_argument("--noise must be gaussian or bernoulli");
    }
    cfg.sigma = args.sigma;
    cfg.sparsity_p = args.sparsity;
    if (args.scheme != "balanced" && args.scheme != "multinomial") {
        throw std::invalid_argument("--scheme must be balanced or multinomial");
    }
    cfg.scheme = args.scheme == "balanced" ? tbm::MembershipScheme::balanced
                                           : tbm::MembershipScheme::multinomial;
    cfg.min_size = args.min_size;
    cfg.seed = args.seed;

    const tbm::SimOutput out = tbm::gen_data(cfg);
    tbm::write_tsr_file(ctx.out_path("y.tsr"), out.y);
    tbm::write_tbm_file(ctx.out_path("truth.tbm"), out.truth);
    tbm::write_tsr_file(ctx.out_path("theta.tsr"), out.theta_true);

    ctx.config = {{"dims", args.dims},       {"ranks", args.ranks},
                  {"noise", args.noise},     {"sigma", args.sigma},
                  {"sparsity", args.sparsity}, {"scheme", args.scheme},
                  {"min_size", args.min_size}, {"seed", args.seed}};
    write_text_file(ctx.out_path("config.json"), ctx.config.dump(2) + "\n");
    return kExitOk;
}

// --------------------------------- fit ------------------------------------

struct FitArgs {
    std::string input;
    std::vector<std::size_t> ranks;
    int restarts = 10;
    std::uint64_t seed = 0;
    std::string penalty = "none";
    double lambda = 0.0;
    int max_iters = 100;
    double rel_tol = 1e-10;
    std::string out;
};

int run_fit(RunContext& ctx, const FitArgs& args) {
    ctx.inputs.push_back(args.input);
    const tbm::Tensor y = tbm::read_tsr_file(args.input);

    tbm::FitConfig cfg;
    cfg.ranks = args.ranks;
    cfg.restarts = args.restarts;
    cfg.max_iters = args.max_iters;
    cfg.rel_tol = args.rel_tol;
    cfg.penalty = make_penalty(args.penalty, args.lambda);
    cfg.seed = args.seed;

    const tbm::BlockModelFit fit = tbm::fit(y, cfg);
    tbm::write_tbm_file(ctx.out_path("model.tbm"), fit.model);

    if (tbm::has_near_duplicate_slices(fit.model.core)) {
        std::cerr << "warning: fitted core has near-duplicate slices "
                     "(relative tolerance 1e-9); cluster sizes may be "
                     "over-specified\n";
    }

    const tbm::BlockGap gap = tbm::block_gap(fit.model.core);
    json gap_json = json::object();
    gap_json["per_mode"] = json::array();
    for (const auto& g : gap.per_mode) {
        gap_json["per_mode"].push_back(g ? json(*g) : json());
    }
    gap_json["delta_min"] = gap.delta_min ? json(*gap.delta_min) : json();

    ctx.config = {{"input", args.input},
                  {"ranks", args.ranks},
                  {"restarts", args.restarts},
                  {"max_iters", args.max_iters},
                  {"rel_tol", args.rel_tol},
                  {"penalty", penalty_json(cfg.penalty)},
                  {"seed", args.seed}};
    json report{{"objective", fit.objective},
                {"residual", fit.residual},
                {"objective_trace", fit.objective_trace},
                {"iterations_used", fit.iterations_used},
                {"restart_index", fit.restart_index},
                {"converged", fit.converged},
                {"block_gap", gap_json},
                {"config", ctx.config}};
    write_text_file(ctx.out_path("report.json"), report.dump(2) + "\n");
    return kExitOk;
}

// -------------------------------- select ----------------------------------

struct SelectArgs {
    std::string input;
    std::string mode = "ranks";
    std::vector<std::string> ranks_grid;
    std::vector<std::size_t> ranks;
    std::vector<double> lambda_grid;
    int lambda_count = 20;
    std::string search = "cartesian";
    int passes = 2;
    std::string penalty = "l0";
    int restarts = 10;
    std::uint64_t seed = 0;
    int max_iters = 100;
    double rel_tol = 1e-10;
    std::string out;
};

int run_select(RunContext& ctx, const SelectArgs& args) {
    ctx.inputs.push_back(args.input);
    const tbm::Tensor y = tbm::read_tsr_file(args.input);

    tbm::FitConfig tmpl;
    tmpl.restarts = args.restarts;
    tmpl.max_iters = args.max_iters;
    tmpl.rel_tol = args.rel_tol;
    tmpl.seed = args.seed;

    if (args.mode == "ranks") {
        if (args.ranks_grid.empty()) {
            throw std::invalid_argument("--ranks-grid is required for "
                                        "--mode ranks");
        }
        const auto ranges = parse_rank_ranges(args.ranks_grid);
        tbm::RankSelection sel;
        if (args.search == "cartesian") {
            tbm::SelectionGrid grid;
            grid.rank_candidates = tbm::cartesian_ranks(ranges);
            grid.fit_config_template = tmpl;
            sel = tbm::select_ranks(y, grid);
        } else if (args.search == "coordinate") {
            sel = tbm::select_ranks_coordinate(y, ranges, tmpl, args.passes);
        } else {
            throw std::invalid_argument(
                "--search must be cartesian or coordinate");
        }

        std::ostringstream csv;
        csv << "ranks,residual,p_e,bic,converged,error\n";
        for (const tbm::RankCandidate& row : sel.table) {
            std::string ranks;
            for (std::size_t k = 0; k < row.ranks.size(); ++k) {
                ranks += (k ? "x" : "") + std::to_string(row.ranks[k]);
            }
            csv << ranks << ',' << csv_escape_none(row.residual) << ','
                << csv_escape_none(row.p_e) << ',' << csv_escape_none(row.bic)
                << ',' << (row.converged ? "true" : "false") << ','
                << row.error << '\n';
        }
        write_text_file(ctx.out_path("selection.csv"), csv.str());
        json best{{"best_ranks", sel.best_ranks}};
        write_text_file(ctx.out_path("best.json"), best.dump(2) + "\n");
        ctx.config = {{"input", args.input},   {"mode", args.mode},
                      {"ranks_grid", args.ranks_grid},
                      {"search", args.search}, {"passes", args.passes},
                      {"restarts", args.restarts}, {"seed", args.seed},
                      {"max_iters", args.max_iters}, {"rel_tol", args.rel_tol}};
        return kExitOk;
    }
    if (args.mode != "lambda") {
        throw std::invalid_argument("--mode must be ranks or lambda");
    }
    if (args.ranks.empty()) {
        throw std::invalid_argument("--ranks is required for --mode lambda");
    }
    tmpl.penalty = make_penalty(args.penalty, 0.0);
    if (tmpl.penalty.kind == tbm::PenaltyKind::none) {
        throw std::invalid_argument(
            "--penalty must be l0 or l1 for lambda selection");
    }
    tbm::SelectionGrid grid;
    grid.fit_config_template = tmpl;
    grid.lambda_candidates =
        args.lambda_grid.empty()
            ? tbm::default_lambda_grid(y, args.ranks, tmpl, args.lambda_count)
            : args.lambda_grid;
    const tbm::LambdaSelection sel = tbm::select_lambda(y, args.ranks, grid);

    std::ostringstream csv;
    csv << "lambda,residual,p_e,bic,converged,error\n";
    for (const tbm::LambdaCandidate& row : sel.table) {
        csv << csv_escape_none(row.lambda) << ','
            << csv_escape_none(row.residual) << ',' << csv_escape_none(row.p_e)
            << ',' << csv_escape_none(row.bic) << ','
            << (row.converged ? "true" : "false") << ',' << row.error << '\n';
    }
    write_text_file(ctx.out_path("selection.csv"), csv.str());
    json best{{"best_lambda", sel.best_lambda}};
    write_text_file(ctx.out_path("best.json"), best.dump(2) + "\n");
    ctx.config = {{"input", args.input},       {"mode", args.mode},
                  {"ranks", args.ranks},       {"penalty", args.penalty},
                  {"lambda_grid", grid.lambda_candidates},
                  {"restarts", args.restarts}, {"seed", args.seed},
                  {"max_iters", args.max_iters}, {"rel_tol", args.rel_tol}};
    return kExitOk;
}

// ------------------------------- evaluate ---------------------------------

struct EvaluateArgs {
    std::string truth_model;
    std::string est_model;
    std::string truth_theta;
    std::string est_theta;
    std::string input;
    std::string out;
};

int run_evaluate(RunContext& ctx, const EvaluateArgs& args) {
    ctx.inputs.push_back(args.truth_model);
    ctx.inputs.push_back(args.est_model);
    const tbm::BlockModel truth = tbm::read_tbm_file(args.truth_model);
    const tbm::BlockModel est = tbm::read_tbm_file(args.est_model);
    if (truth.data_dims() != est.data_dims()) {
        throw std::invalid_argument(
            "truth and estimate are defined on different dims");
    }

    tbm::Tensor theta_true = args.truth_theta.empty()
                                 ? assemble_mean(truth)
                                 : tbm::read_tsr_file(args.truth_theta);
    tbm::Tensor theta_est = args.est_theta.empty()
                                ? assemble_mean(est)
                                : tbm::read_tsr_file(args.est_theta);
    if (!args.truth_theta.empty()) ctx.inputs.push_back(args.truth_theta);
    if (!args.est_theta.empty()) ctx.inputs.push_back(args.est_theta);

    const std::size_t order = truth.memberships.size();
    std::vector<std::string> header{"rmse", "cer"};
    std::vector<std::string> cells{
        csv_escape_none(tbm::rmse(theta_true, theta_est)),
        csv_escape_none(tbm::cer(truth, est))};

    for (std::size_t k = 0; k < order; ++k) {
        header.push_back("mcr_" + std::to_string(k));
        const tbm::Membership& t = truth.memberships[k];
        const tbm::Membership& e = est.memberships[k];
        if (t.num_clusters() == e.num_clusters()) {
            cells.push_back(csv_escape_none(tbm::mcr(t, e)));
        } else {
            // Cluster counts differ: report the confusion matrix instead.
            cells.push_back("");
            const tbm::ConfusionMatrix d = tbm::confusion(t, e);
            std::ostringstream cm;
            for (std::size_t r = 0; r < d.true_clusters(); ++r) {
                for (std::size_t c = 0; c < d.est_clusters(); ++c) {
                    cm << csv_escape_none(d(r, c))
                       << (c + 1 == d.est_clusters() ? '\n' : ',');
                }
            }
            write_text_file(
                ctx.out_path("confusion_mode" + std::to_string(k) + ".csv"),
                cm.str());
        }
    }
    // Minimum marginal proportions: the non-degeneracy premise behind MCR.
    for (std::size_t k = 0; k < order; ++k) {
        header.push_back("min_prop_" + std::to_string(k));
        cells.push_back(
            csv_escape_none(tbm::min_cluster_proportion(est.memberships[k])));
    }

    bool carries_zeros = false;
    for (double v : truth.core.data()) carries_zeros |= (v == 0.0);
    for (double v : est.core.data()) carries_zeros |= (v == 0.0);
    header.insert(header.end(), {"estimated_sparsity", "correct_zero_rate",
                                 "sparsity_error_rate"});
    if (carries_zeros && truth.ranks() == est.ranks()) {
        const tbm::SparsityMetrics sm = tbm::sparsity_metrics(truth, est);
        cells.push_back(csv_escape_none(sm.estimated_sparsity_rate));
        cells.push_back(csv_escape_none(sm.correct_zero_rate));
        cells.push_back(csv_escape_none(sm.sparsity_error_rate));
    } else {
        cells.insert(cells.end(), {"", "", ""});
    }

    header.push_back("variance_explained");
    if (!args.input.empty()) {
        ctx.inputs.push_back(args.input);
        const tbm::Tensor y = tbm::read_tsr_file(args.input);
        const std::optional<double> ve = tbm::variance_explained(y, theta_est);
        cells.push_back(ve ? csv_escape_none(*ve) : "");
    } else {
        cells.push_back("");
    }

    std::ostringstream csv;
    for (std::size_t i = 0; i < header.size(); ++i) {
        csv << header[i] << (i + 1 == header.size() ? '\n' : ',');
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        csv << cells[i] << (i + 1 == cells.size() ? '\n' : ',');
    }
    write_text_file(ctx.out_path("metrics.csv"), csv.str());
    ctx.config = {{"truth_model", args.truth_model},
                  {"est_model", args.est_model},
                  {"truth_theta", args.truth_theta},
                  {"est_theta", args.est_theta},
                  {"input", args.input}};
    return kExitOk;
}

// ------------------------------- benchmark --------------------------------

struct BenchmarkArgs {
    std::string suite;
    int sims = 0;  // 0: suite default
    std::uint64_t seed = 0;
    std::string out;
};

int run_benchmark(RunContext& ctx, const BenchmarkArgs& args) {
    using namespace tbm::suites;
    json frozen;
    std::ostringstream csv;
    if (args.suite == "scaling3" || args.suite == "scaling4") {
        const int sims = args.sims > 0 ? args.sims : 10;
        ScalingConfig cfg = args.suite == "scaling3"
                                ? scaling3_defaults(args.seed, sims)
                                : scaling4_defaults(args.seed, sims);
        const ScalingResult result = run_scaling(cfg);
        write_scaling_csv(csv, result);
        frozen = {{"ranks", cfg.ranks},       {"d1_values", cfg.d1_values},
                  {"sigma", cfg.sigma},       {"sims", cfg.sims},
                  {"restarts", cfg.restarts}, {"max_iters", cfg.max_iters},
                  {"rel_tol", cfg.rel_tol},   {"slope", result.slope}};
        // The balancing rule fixes (d_2, d_3[, d_4]); record them.
        frozen["points"] = json::array();
        for (const ScalingPoint& pt : result.points) {
            frozen["points"].push_back(
                {{"dims", pt.dims}, {"n_rescaled", pt.n_rescaled}});
        }
    } else if (args.suite == "bic-table") {
        const int sims = args.sims > 0 ? args.sims : 20;
        std::vector<BicRowResult> results;
        frozen["rows"] = json::array();
        for (const BicRowConfig& row : bic_table_rows(args.seed, sims)) {
            results.push_back(run_bic_row(row));
            frozen["rows"].push_back({{"dims", row.dims},
                                      {"true_ranks", row.true_ranks},
                                      {"sigma", row.sigma},
                                      {"rank_lo", row.rank_lo},
                                      {"rank_hi", row.rank_hi},
                                      {"passes", row.passes},
                                      {"restarts", row.restarts},
                                      {"sims", row.sims}});
        }
        write_bic_csv(csv, results);
    } else if (args.suite == "sparse-table") {
        const int sims = args.sims > 0 ? args.sims : 20;
        std::vector<SparseRowResult> results;
        frozen["rows"] = json::array();
        for (const SparseRowConfig& row : sparse_table_rows(args.seed, sims)) {
            results.push_back(run_sparse_row(row));
            frozen["rows"].push_back({{"dims", row.dims},
                                      {"ranks", row.ranks},
                                      {"p", row.sparsity_p},
                                      {"sigma", row.sigma},
                                      {"lambda_count", row.lambda_count},
                                      {"restarts", row.restarts},
                                      {"sims", row.sims}});
        }
        write_sparse_csv(csv, results);
    } else {
        throw std::invalid_argument("unknown --suite '" + args.suite +
                                    "' (scaling3, scaling4, bic-table, "
                                    "sparse-table)");
    }
    write_text_file(ctx.out_path(args.suite + ".csv"), csv.str());
    ctx.config = {{"suite", args.suite},
                  {"sims", args.sims},
                  {"seed", args.seed},
                  {"frozen", frozen}};
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tbm: least-squares multiway clustering of order-K tensors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tbm::kVersion);

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "generate synthetic data");
    sim->add_option("--dims", sim_args.dims, "tensor dimensions d_1,...,d_K")
        ->required()
        ->delimiter(',');
    sim->add_option("--ranks", sim_args.ranks, "cluster sizes R_1,...,R_K")
        ->required()
        ->delimiter(',');
    sim->add_option("--noise", sim_args.noise, "gaussian|bernoulli");
    sim->add_option("--sigma", sim_args.sigma, "Gaussian noise level");
    sim->add_option("--sparsity", sim_args.sparsity,
                    "zero-mass probability for core entries");
    sim->add_option("--scheme", sim_args.scheme, "balanced|multinomial");
    sim->add_option("--min-size", sim_args.min_size,
                    "minimum cluster size (multinomial)");
    sim->add_option("--seed", sim_args.seed, "RNG seed");
    sim->add_option("--out", sim_args.out, "output directory")->required();

    FitArgs fit_args;
    CLI::App* fitc = app.add_subcommand("fit", "fit a block model");
    fitc->add_option("--input", fit_args.input, "input .tsr file")->required();
    fitc->add_option("--ranks", fit_args.ranks, "cluster sizes R_1,...,R_K")
        ->required()
        ->delimiter(',');
    fitc->add_option("--restarts", fit_args.restarts, "random restarts");
    fitc->add_option("--seed", fit_args.seed, "RNG seed");
    fitc->add_option("--penalty", fit_args.penalty, "none|l0|l1");
    fitc->add_option("--lambda", fit_args.lambda, "penalty strength");
    fitc->add_option("--max-iters", fit_args.max_iters, "sweep cap");
    fitc->add_option("--rel-tol", fit_args.rel_tol,
                     "relative objective-decrease stop rule");
    fitc->add_option("--out", fit_args.out, "output directory")->required();

    SelectArgs sel_args;
    CLI::App* sel = app.add_subcommand("select",
                                       "BIC selection of ranks or lambda");
    sel->add_option("--input", sel_args.input, "input .tsr file")->required();
    sel->add_option("--mode", sel_args.mode, "ranks|lambda");
    sel->add_option("--ranks-grid", sel_args.ranks_grid,
                    "per-mode lo:hi ranges, e.g. 2:6,2:6,2:6")
        ->delimiter(',');
    sel->add_option("--ranks", sel_args.ranks,
                    "fixed ranks for lambda selection")
        ->delimiter(',');
    sel->add_option("--lambda-grid", sel_args.lambda_grid,
                    "explicit lambda values (default: auto grid)")
        ->delimiter(',');
    sel->add_option("--lambda-count", sel_args.lambda_count,
                    "size of the auto lambda grid");
    sel->add_option("--search", sel_args.search, "cartesian|coordinate");
    sel->add_option("--passes", sel_args.passes, "coordinate-descent passes");
    sel->add_option("--penalty", sel_args.penalty,
                    "l0|l1 (lambda mode only)");
    sel->add_option("--restarts", sel_args.restarts, "restarts per fit");
    sel->add_option("--seed", sel_args.seed, "RNG seed");
    sel->add_option("--max-iters", sel_args.max_iters, "sweep cap");
    sel->add_option("--rel-tol", sel_args.rel_tol, "stop rule");
    sel->add_option("--out", sel_args.out, "output directory")->required();

    EvaluateArgs eval_args;
    CLI::App* eval = app.add_subcommand("evaluate",
                                        "metrics between truth and estimate");
    eval->add_option("--truth-model", eval_args.truth_model, ".tbm truth")
        ->required();
    eval->add_option("--est-model", eval_args.est_model, ".tbm estimate")
        ->required();
    eval->add_option("--truth-theta", eval_args.truth_theta,
                     ".tsr true mean (default: assembled)");
    eval->add_option("--est-theta", eval_args.est_theta,
                     ".tsr estimated mean (default: assembled)");
    eval->add_option("--input", eval_args.input,
                     ".tsr data for variance explained");
    eval->add_option("--out", eval_args.out, "output directory")->required();

    BenchmarkArgs bench_args;
    CLI::App* bench = app.add_subcommand("benchmark",
                                         "end-to-end reproduction suites");
    bench->add_option("--suite", bench_args.suite,
                      "scaling3|scaling4|bic-table|sparse-table")
        ->required();
    bench->add_option("--sims", bench_args.sims,
                      "simulations per point/row (0: suite default)");
    bench->add_option("--seed", bench_args.seed, "RNG seed");
    bench->add_option("--out", bench_args.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    RunContext ctx;
    for (int i = 0; i < argc; ++i) ctx.argv.emplace_back(argv[i]);

    // One manifest per invocation, error or not, whenever the output
    // directory is known.
    auto fail = [&](const char* prefix, const std::exception& e, int rc) {
        std::cerr << prefix << e.what() << '\n';
        if (!ctx.out_dir.empty()) {
            try {
                ctx.write_manifest(e.what());
            } catch (...) {
            }
        }
        return rc;
    };

    try {
        int rc = kExitOk;
        if (sim->parsed()) {
            ctx.command = "simulate";
            ctx.out_dir = sim_args.out;
            ctx.seed = sim_args.seed;
            rc = run_simulate(ctx, sim_args);
        } else if (fitc->parsed()) {
            ctx.command = "fit";
            ctx.out_dir = fit_args.out;
            ctx.seed = fit_args.seed;
            rc = run_fit(ctx, fit_args);
        } else if (sel->parsed()) {
            ctx.command = "select";
            ctx.out_dir = sel_args.out;
            ctx.seed = sel_args.seed;
            rc = run_select(ctx, sel_args);
        } else if (eval->parsed()) {
            ctx.command = "evaluate";
            ctx.out_dir = eval_args.out;
            rc = run_evaluate(ctx, eval_args);
        } else if (bench->parsed()) {
            ctx.command = "benchmark";
            ctx.out_dir = bench_args.out;
            ctx.seed = bench_args.seed;
            rc = run_benchmark(ctx, bench_args);
        }
        ctx.write_manifest();
        return rc;
    } catch (const tbm::ParseError& e) {
        return fail("error: ", e, kExitParse);
    } catch (const std::invalid_argument& e) {
        return fail("error: ", e, kExitConfig);
    } catch (const std::logic_error& e) {
        return fail("internal error: ", e, kExitInternal);
    } catch (const std::exception& e) {
        return fail("error: ", e, 1);
    }
}
