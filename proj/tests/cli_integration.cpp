// End-to-end checks of the tbm executable: file formats, exit codes,
// determinism, and the documented output layout. Invoked as
//   cli_integration <path-to-tbm>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++failures;
        std::cerr << "FAIL: " << what << '\n';
    }
}

int run(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    if (status < 0) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

json slurp_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

std::vector<std::string> csv_lines(const fs::path& p) {
    std::ifstream is(p);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string cell;
    while (std::getline(is, cell, sep)) out.push_back(cell);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cli_integration <path-to-tbm>\n";
        return 2;
    }
    const std::string tbm = argv[1];
    const fs::path root =
        fs::temp_directory_path() /
        ("tbm_cli_" + std::to_string(static_cast<long>(::getpid())));
    fs::remove_all(root);
    fs::create_directories(root);
    const auto dir = [&](const std::string& name) {
        return (root / name).string();
    };

    // simulate: sigma 0 means y equals theta, and reruns are byte-identical.
    check(run(tbm + " simulate --dims 6,5,4 --ranks 2,2,2 --sigma 0"
                    " --seed 7 --out " + dir("sim0")) == 0,
          "simulate exit 0");
    check(slurp(root / "sim0/y.tsr") == slurp(root / "sim0/theta.tsr"),
          "sigma 0: y.tsr equals theta.tsr");
    check(run(tbm + " simulate --dims 6,5,4 --ranks 2,2,2 --sigma 0"
                    " --seed 7 --out " + dir("sim0b")) == 0,
          "simulate rerun exit 0");
    check(slurp(root / "sim0/y.tsr") == slurp(root / "sim0b/y.tsr"),
          "same seed: byte-identical y.tsr");
    check(slurp(root / "sim0/truth.tbm") == slurp(root / "sim0b/truth.tbm"),
          "same seed: byte-identical truth.tbm");
    check(fs::exists(root / "sim0/manifest.json"), "simulate manifest exists");
    check(fs::exists(root / "sim0/config.json"), "simulate config echo exists");
    {
        const json m = slurp_json(root / "sim0/manifest.json");
        check(m["command"] == "simulate", "manifest records the command");
        check(m["seed"] == 7, "manifest records the seed");
    }

    // simulate: bernoulli values are exactly 0/1.
    check(run(tbm + " simulate --dims 8,8 --ranks 2,2 --noise bernoulli"
                    " --seed 3 --out " + dir("simb")) == 0,
          "bernoulli simulate exit 0");
    {
        std::istringstream is(slurp(root / "simb/y.tsr"));
        std::string tok;
        is >> tok >> tok >> tok;  // K, d1, d2
        double v = 0.0;
        bool all01 = true;
        while (is >> v) all01 = all01 && (v == 0.0 || v == 1.0);
        check(all01, "bernoulli outputs in {0,1}");
    }

    // fit at the true ranks on noiseless data: objective 0, converged.
    check(run(tbm + " fit --input " + dir("sim0") + "/y.tsr"
                    " --ranks 2,2,2 --restarts 5 --seed 1 --out " +
              dir("fit0")) == 0,
          "fit exit 0");
    {
        const json r = slurp_json(root / "fit0/report.json");
        check(r["objective"].get<double>() <= 1e-15, "noiseless objective 0");
        check(r["converged"].get<bool>(), "noiseless fit converged");
        check(r["objective_trace"].size() >= 1, "trace recorded");
        check(fs::exists(root / "fit0/model.tbm"), "model.tbm written");
    }

    // fit: infeasible ranks -> exit 3; malformed input -> exit 2. Failed
    // invocations still leave a manifest recording the error.
    check(run(tbm + " fit --input " + dir("sim0") + "/y.tsr"
                    " --ranks 60,2,2 --out " + dir("fit_bad")) == 3,
          "infeasible ranks exit 3");
    {
        const json m = slurp_json(root / "fit_bad/manifest.json");
        check(m.contains("error"), "failed run manifest records the error");
    }
    write_file(root / "garbage.tsr", "2\n2 2\n1 2 oops\n");
    check(run(tbm + " fit --input " + (root / "garbage.tsr").string() +
              " --ranks 2,2 --out " + dir("fit_garbage")) == 2,
          "parse failure exit 2");

    // select: grid containing the truth at sigma 0 selects the truth.
    check(run(tbm + " select --input " + dir("sim0") + "/y.tsr"
                    " --mode ranks --ranks-grid 2:3,2:3,2:3 --restarts 3"
                    " --seed 5 --out " + dir("sel0")) == 0,
          "select exit 0");
    {
        const json best = slurp_json(root / "sel0/best.json");
        check(best["best_ranks"] == json::array({2, 2, 2}),
              "truth selected at sigma 0");
        const auto lines = csv_lines(root / "sel0/selection.csv");
        check(lines.size() == 9, "selection.csv has 8 candidates + header");
        check(lines[0] == "ranks,residual,p_e,bic,converged,error",
              "selection.csv header");
    }

    // select: coordinate search on the same data agrees at sigma 0.
    check(run(tbm + " select --input " + dir("sim0") + "/y.tsr"
                    " --mode ranks --ranks-grid 2:3,2:3,2:3 --search coordinate"
                    " --restarts 3 --seed 5 --out " + dir("sel_coord")) == 0,
          "coordinate select exit 0");
    check(slurp_json(root / "sel_coord/best.json")["best_ranks"] ==
              json::array({2, 2, 2}),
          "coordinate search finds the truth at sigma 0");

    // select: lambda mode with an explicit grid.
    check(run(tbm + " simulate --dims 12,12,12 --ranks 2,2,2 --sigma 2"
                    " --sparsity 0.5 --seed 9 --out " + dir("sim_sparse")) == 0,
          "sparse simulate exit 0");
    check(run(tbm + " select --input " + dir("sim_sparse") + "/y.tsr"
                    " --mode lambda --ranks 2,2,2 --penalty l0"
                    " --lambda-grid 0.5,5,50,500 --restarts 3 --seed 5"
                    " --out " + dir("sel_lambda")) == 0,
          "lambda select exit 0");
    {
        const json best = slurp_json(root / "sel_lambda/best.json");
        check(best.contains("best_lambda"), "best_lambda reported");
        const auto lines = csv_lines(root / "sel_lambda/selection.csv");
        check(lines.size() == 5, "lambda selection.csv has 4 candidates");
        check(lines[0] == "lambda,residual,p_e,bic,converged,error",
              "lambda selection.csv header");
    }

    // evaluate: estimate equal to the truth has zero errors everywhere.
    check(run(tbm + " evaluate --truth-model " + dir("sim0") + "/truth.tbm"
                    " --est-model " + dir("sim0") + "/truth.tbm --input " +
              dir("sim0") + "/y.tsr --out " + dir("eval_same")) == 0,
          "evaluate exit 0");
    {
        const auto lines = csv_lines(root / "eval_same/metrics.csv");
        const auto header = split(lines.at(0), ',');
        const auto cells = split(lines.at(1), ',');
        auto cell = [&](const std::string& name) -> std::string {
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (header[i] == name) return i < cells.size() ? cells[i] : "";
            }
            return "<missing>";
        };
        check(cell("rmse") == "0", "rmse 0 for identical models");
        check(cell("cer") == "0", "cer 0 for identical models");
        check(cell("mcr_0") == "0", "mcr 0 for identical models");
        check(cell("variance_explained") == "1",
              "variance explained 1 when est equals data-generating truth");
    }

    // evaluate: permuted labels are still a perfect clustering.
    {
        // 4x4 truth with labels (0,0,1,1) per mode; estimate permutes both.
        write_file(root / "truth.tbm",
                   "2\n2 2\n0 0 1 1\n0 0 1 1\n1 2 3 4\n");
        write_file(root / "perm.tbm",
                   "2\n2 2\n1 1 0 0\n1 1 0 0\n4 3 2 1\n");
        check(run(tbm + " evaluate --truth-model " +
                  (root / "truth.tbm").string() + " --est-model " +
                  (root / "perm.tbm").string() + " --out " +
                  dir("eval_perm")) == 0,
              "evaluate permuted exit 0");
        const auto lines = csv_lines(root / "eval_perm/metrics.csv");
        const auto header = split(lines.at(0), ',');
        const auto cells = split(lines.at(1), ',');
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "mcr_0" || header[i] == "mcr_1" ||
                header[i] == "cer" || header[i] == "rmse") {
                check(cells[i] == "0", header[i] + " 0 for permuted labels");
            }
        }
    }

    // evaluate: the worked confusion example (true (0,0,1,1) vs est
    // (0,1,1,1) on one mode) has MCR 0.25 on that mode.
    {
        write_file(root / "t2.tbm", "2\n2 2\n0 0 1 1\n0 0 1 1\n1 2 3 4\n");
        write_file(root / "e2.tbm", "2\n2 2\n0 1 1 1\n0 0 1 1\n1 2 3 4\n");
        check(run(tbm + " evaluate --truth-model " + (root / "t2.tbm").string() +
                  " --est-model " + (root / "e2.tbm").string() + " --out " +
                  dir("eval_mix")) == 0,
              "evaluate mixed exit 0");
        const auto lines = csv_lines(root / "eval_mix/metrics.csv");
        const auto header = split(lines.at(0), ',');
        const auto cells = split(lines.at(1), ',');
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "mcr_0") {
                check(cells[i] == "0.25", "worked confusion example: mcr 0.25");
            }
        }
    }

    // benchmark: unknown suite name is a config error.
    check(run(tbm + " benchmark --suite nope --out " + dir("bench_bad")) == 3,
          "unknown suite exit 3");

    // benchmark: a small scaling4 run emits per-seed rows plus summaries
    // whose statistics recompute from the per-seed rows.
    check(run(tbm + " benchmark --suite scaling4 --sims 1 --seed 2 --out " +
              dir("bench4")) == 0,
          "scaling4 benchmark exit 0");
    {
        const auto lines = csv_lines(root / "bench4/scaling4.csv");
        check(lines.at(0) == "row_type,ranks,dims,n_rescaled,sim,metric,value",
              "scaling csv header");
        int sim_rows = 0, summary_rows = 0;
        double sim_rmse = -1.0, mean_rmse = -2.0;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto cells = split(lines[i], ',');
            if (cells.at(0) == "sim") {
                ++sim_rows;
                if (sim_rmse < 0 && cells.at(5) == "rmse") {
                    sim_rmse = std::stod(cells.at(6));
                }
            }
            if (cells.at(0) == "summary") {
                ++summary_rows;
                if (mean_rmse < -1 && cells.at(5) == "rmse_mean") {
                    mean_rmse = std::stod(cells.at(6));
                }
            }
        }
        check(sim_rows == 4, "one per-seed row per point");
        check(summary_rows > 0, "summary rows present");
        check(sim_rmse == mean_rmse,
              "summary mean recomputes from the single per-seed row");
        const json m = slurp_json(root / "bench4/manifest.json");
        check(m["config"]["frozen"]["points"].size() == 4,
              "derived dims recorded in the manifest");
    }

    if (failures == 0) {
        std::cout << "cli_integration: all checks passed\n";
        fs::remove_all(root);
        return 0;
    }
    std::cout << "cli_integration: " << failures << " failures (outputs in "
              << root << ")\n";
    return 1;
}
