// Command-line front end: generation, discovery, decomposition, evaluation,
// sweeps, and the closed-form calculators, all emitting reproducible files.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcastle/adr_sim.hpp"
#include "mcastle/baselines.hpp"
#include "mcastle/bench.hpp"
#include "mcastle/errors.hpp"
#include "mcastle/graph_analysis.hpp"
#include "mcastle/lens.hpp"
#include "mcastle/pip.hpp"
#include "mcastle/rng.hpp"
#include "mcastle/stats.hpp"
#include "mcastle/tensor.hpp"
#include "mcastle/theory.hpp"
#include "mcastle/var_bench.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mcastle;

namespace {

int default_jobs() {
    if (const char* env = std::getenv("MCASTLE_JOBS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            raise(Errc::usage, std::string("MCASTLE_JOBS is not a number: ") + env);
        }
    }
    return 1;
}

std::string read_text_file(const std::string& path) {
    if (!fs::exists(path)) raise(Errc::usage, "no such file: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::io, "cannot open " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out.flush()) raise(Errc::io, "short write to " + path);
}

PipConfig load_pip_config(const std::string& config_path, const std::string& backend_flag) {
    PipConfig cfg;
    if (!config_path.empty()) cfg = pip_config_from_json(read_text_file(config_path));
    if (backend_flag == "ci")
        cfg.backend = PipBackend::ci;
    else if (backend_flag == "lasso")
        cfg.backend = PipBackend::lasso;
    else if (!backend_flag.empty())
        raise(Errc::usage, "unknown backend: " + backend_flag);
    return cfg;
}

int run_gen_var(const std::string& spec_path, const std::string& out_dir, int replicates) {
    const GenSpec spec = gen_spec_from_json(read_text_file(spec_path));
    if (replicates < 1) raise(Errc::usage, "replicates must be >= 1");
    fs::create_directories(out_dir);

    json manifest;
    manifest["spec"] = json::parse(gen_spec_to_json(spec));
    json reps = json::array();
    for (int r = 0; r < replicates; ++r) {
        const std::uint64_t rep_seed = hash64(spec.seed, static_cast<std::uint64_t>(r));
        GenSpec rep_spec = spec;
        rep_spec.seed = hash64(rep_seed, 0);
        const GeneratedSystem sys = generate_system(rep_spec);
        GenSpec sim_spec = rep_spec;
        sim_spec.seed = hash64(rep_seed, 1);
        const GridTensor x = simulate(sys.a, sim_spec);

        char name[32];
        std::snprintf(name, sizeof name, "rep_%03d", r);
        const std::string tensor_name = std::string(name) + ".tensor";
        const std::string truth_name = std::string(name) + ".truth.json";
        write_tensor(x, fs::path(out_dir) / tensor_name);
        write_text_file((fs::path(out_dir) / truth_name).string(),
                        graph_to_json(ground_truth_graph(sys.ndm)));
        reps.push_back({{"index", r},
                        {"seed", rep_seed},
                        {"gen_seed", rep_spec.seed},
                        {"sim_seed", sim_spec.seed},
                        {"attempts", sys.attempts},
                        {"tensor", tensor_name},
                        {"truth", truth_name}});
    }
    manifest["replicates"] = std::move(reps);
    write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2));
    std::cout << "wrote " << replicates << " replicates to " << out_dir << "\n";
    return 0;
}

int run_discover(const std::string& in_path, const std::string& method,
                 const std::string& backend_flag, const std::string& config_path,
                 const std::string& out_path) {
    const PipConfig cfg = load_pip_config(config_path, backend_flag);
    if (!fs::exists(in_path)) raise(Errc::usage, "no such file: " + in_path);
    const GridTensor x = read_tensor(in_path);

    const auto t0 = std::chrono::steady_clock::now();
    std::string graph_text;
    if (method == "mcastle")
        graph_text = graph_to_json(discover(x, cfg));
    else if (method == "cartesian")
        graph_text = graph_to_json(cartesian_discover(x, cfg));
    else if (method == "direct")
        graph_text = flat_to_json(direct_discover(x, cfg));
    else
        raise(Errc::usage, "unknown method: " + method);
    const auto t1 = std::chrono::steady_clock::now();

    write_text_file(out_path, graph_text);

    json report;
    report["input"] = in_path;
    report["method"] = method;
    report["backend"] = cfg.backend == PipBackend::ci ? "ci_pc_stable" : "lasso";
    report["config"] = json::parse(pip_config_to_json(cfg));
    report["n_rows"] = x.n_rows;
    report["n_cols"] = x.n_cols;
    report["n_vars"] = x.n_vars;
    report["n_time"] = x.n_time;
    if (x.n_rows >= 3 && x.n_cols >= 3) {
        const std::size_t pooled = effective_samples(x.n_rows, x.n_cols, x.n_time);
        const double de = design_effect_window(static_cast<double>(x.n_rows - 2),
                                               static_cast<double>(x.n_cols - 2));
        report["L"] = pooled;
        report["design_effect"] = de;
        report["L_eff"] = static_cast<double>(pooled) / de;
        report["usable_rows"] =
            (x.n_rows - 2) * (x.n_cols - 2) * (x.n_time > 0 ? x.n_time - 1 : 0);
    }
    report["elapsed_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    write_text_file(out_path + ".report.json", report.dump(2));
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int run_decompose(const std::string& in_path, const std::string& out_prefix) {
    const StencilGraph g = graph_from_json(read_text_file(in_path));
    write_text_file(out_prefix + ".reaction.json", reaction_to_json(decompose_reaction(g)));
    write_text_file(out_prefix + ".spatial.json", spatial_to_json(decompose_spatial(g)));
    std::cout << "wrote " << out_prefix << ".reaction.json and " << out_prefix
              << ".spatial.json\n";
    return 0;
}

int run_eval(const std::string& pred_path, const std::string& truth_path) {
    const std::string pred_text = read_text_file(pred_path);
    const StencilGraph truth = graph_from_json(read_text_file(truth_path));
    F1Result r;
    bool is_flat = false;
    try {
        const json sniff = json::parse(pred_text);
        is_flat = sniff.is_object() && sniff.value("kind", std::string()) == "flat";
    } catch (const json::exception& e) {
        raise(Errc::format, std::string("prediction parse error: ") + e.what());
    }
    if (is_flat)
        r = direct_f1(flat_from_json(pred_text), truth);
    else
        r = graph_f1(graph_from_json(pred_text), truth);
    std::cout << "tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn << " precision=" << r.precision
              << " recall=" << r.recall << " f1=" << r.f1 << "\n";
    return 0;
}

int run_theory(std::size_t n, std::size_t v, std::size_t t) {
    const std::size_t pooled = effective_samples(n, n, t);
    const double de = design_effect_window(static_cast<double>(n - 2), static_cast<double>(n - 2));
    const ComplexityReport cr = complexity_compare(n, v, t);
    std::cout << "L = " << pooled << "\n"
              << "design_effect = " << de << "\n"
              << "L_eff = " << static_cast<double>(pooled) / de << "\n"
              << "error_reduction = " << error_reduction(n, t) << "\n"
              << "search_naive_log2 = " << cr.search_naive_log2 << "\n"
              << "search_windowed_log2 = " << cr.search_windowed_log2 << "\n"
              << "search_ratio_log10 = " << cr.search_ratio_log10 << "\n"
              << "naive_cost_log10 = " << cr.naive_cost_log10 << "\n"
              << "windowed_cost_log10 = " << cr.windowed_cost_log10 << "\n";
    return 0;
}

int run_sweep_adr(const std::string& spec_path, const std::string& out_csv, int jobs) {
    AdrSweepConfig cfg;
    cfg.out_csv = out_csv;
    cfg.jobs = jobs;
    json j;
    try {
        j = json::parse(read_text_file(spec_path));
    } catch (const json::exception& e) {
        raise(Errc::usage, std::string("sweep spec parse error: ") + e.what());
    }
    if (!j.is_object()) raise(Errc::usage, "sweep spec must be a JSON object");
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "D")
                cfg.diffusions = val.get<std::vector<double>>();
            else if (key == "v")
                cfg.speeds = val.get<std::vector<double>>();
            else if (key == "theta")
                cfg.angles_deg = val.get<std::vector<double>>();
            else if (key == "alpha")
                cfg.alpha = val.get<double>();
            else if (key == "beta")
                cfg.beta = val.get<double>();
            else if (key == "pip")
                cfg.pip = pip_config_from_json(val.dump());
            else
                raise(Errc::usage, "unknown sweep key: " + key);
        }
    } catch (const json::exception& e) {
        raise(Errc::usage, std::string("sweep spec shape error: ") + e.what());
    }
    if (cfg.diffusions.empty() || cfg.speeds.empty() || cfg.angles_deg.empty())
        raise(Errc::usage, "sweep axes must be non-empty");

    const AdrSweepSummary summary = run_adr_sweep(cfg);
    std::cout << "experiments = " << summary.rows.size() << "\n"
              << "median_f1 = " << summary.median_f1 << "\n"
              << "mean_f1 = " << summary.mean_f1 << "\n"
              << "median_delta_low_d = " << summary.median_delta_low_d << "\n"
              << "outlier_trend_rho = " << summary.outlier_trend_rho << "\n";
    return 0;
}

json ordering_to_json(const MethodOrdering& ord) {
    return {{"mean_mcastle", ord.mean_mcastle},
            {"mean_cartesian", ord.mean_cartesian},
            {"mean_direct", ord.mean_direct},
            {"wins_mcastle_vs_cartesian", ord.wins_mc},
            {"losses_mcastle_vs_cartesian", ord.losses_mc},
            {"wins_cartesian_vs_direct", ord.wins_cd},
            {"losses_cartesian_vs_direct", ord.losses_cd},
            {"p_mcastle_over_cartesian", ord.p_mcastle_over_cartesian},
            {"p_cartesian_over_direct", ord.p_cartesian_over_direct}};
}

int run_bench(const std::string& out_dir, std::vector<int> var_counts,
              std::vector<double> densities, int replicates, const std::string& backends,
              std::uint64_t seed, int jobs, bool with_chain) {
    fs::create_directories(out_dir);
    std::vector<PipBackend> backend_list;
    if (backends == "ci")
        backend_list = {PipBackend::ci};
    else if (backends == "lasso")
        backend_list = {PipBackend::lasso};
    else if (backends == "both")
        backend_list = {PipBackend::ci, PipBackend::lasso};
    else
        raise(Errc::usage, "unknown backends selection: " + backends);

    json summary_json;
    for (PipBackend backend : backend_list) {
        VarBenchConfig cfg;
        cfg.var_counts = var_counts;
        cfg.densities = densities;
        cfg.replicates = replicates;
        cfg.seed = seed;
        cfg.jobs = jobs;
        cfg.pip.backend = backend;
        const std::string tag = backend == PipBackend::ci ? "ci" : "lasso";
        const VarBenchSummary summary = run_var_bench(cfg);

        std::ostringstream csv;
        csv << kVarBenchCsvHeader << '\n';
        for (const auto& row : summary.rows) csv << var_bench_csv_row(row) << '\n';
        write_text_file((fs::path(out_dir) / ("var_bench_" + tag + ".csv")).string(), csv.str());

        json js;
        js["var_counts"] = summary.var_counts;
        js["precision_by_v"] = summary.precision_by_v;
        js["f1_by_v"] = summary.f1_by_v;
        js["spearman_f1_vs_v"] = summary.spearman_f1_vs_v;
        js["ordering"] = ordering_to_json(summary.ordering);
        summary_json[tag] = std::move(js);

        std::cout << "[" << tag << "]";
        for (std::size_t i = 0; i < summary.var_counts.size(); ++i)
            std::cout << " V=" << summary.var_counts[i] << " f1=" << summary.f1_by_v[i]
                      << " prec=" << summary.precision_by_v[i];
        std::cout << "\n";
    }

    if (with_chain) {
        ChainSweepConfig ccfg;
        ccfg.seed = seed;
        ccfg.jobs = jobs;
        const std::vector<ChainPoint> points = run_chain_sweep(ccfg);
        std::ostringstream csv;
        csv << "n_vars,coefficient,recall\n";
        json jpoints = json::array();
        for (const auto& pt : points) {
            csv << pt.n_vars << ',' << pt.coefficient << ',' << pt.recall << '\n';
            jpoints.push_back(
                {{"n_vars", pt.n_vars}, {"coefficient", pt.coefficient}, {"recall", pt.recall}});
        }
        write_text_file((fs::path(out_dir) / "chain_recall.csv").string(), csv.str());
        summary_json["chain"] = std::move(jpoints);
    }

    write_text_file((fs::path(out_dir) / "summary.json").string(), summary_json.dump(2));
    std::cout << "wrote " << out_dir << "/summary.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Grid-level space-time causal discovery toolkit.\n"
        "Exit codes: 0 ok, 2 usage/config, 3 generation exhausted, 4 insufficient samples,\n"
        "5 numeric failure, 1 other errors."};
    app.require_subcommand(1);
    int jobs = 1;  // resolved after parse so a bad MCASTLE_JOBS only errors when used

    std::string gv_spec, gv_out;
    int gv_replicates = 1;
    auto* gen_var = app.add_subcommand("gen-var", "Generate stable random systems and simulate them");
    gen_var->add_option("--spec", gv_spec, "generation spec JSON")->required();
    gen_var->add_option("--out", gv_out, "output directory")->required();
    gen_var->add_option("--replicates", gv_replicates, "independent systems to draw");

    std::string d_in, d_method = "mcastle", d_backend, d_config, d_out;
    auto* discover_cmd = app.add_subcommand("discover", "Recover a causal graph from a tensor");
    discover_cmd->add_option("--in", d_in, "input tensor file")->required();
    discover_cmd->add_option("--method", d_method, "mcastle | cartesian | direct");
    discover_cmd->add_option("--backend", d_backend, "ci | lasso (overrides config)");
    discover_cmd->add_option("--config", d_config, "discovery config JSON");
    discover_cmd->add_option("--out", d_out, "output graph JSON")->required();

    std::string dec_in, dec_prefix;
    auto* decompose_cmd = app.add_subcommand("decompose", "Split a stencil graph into reaction and spatial parts");
    decompose_cmd->add_option("--in", dec_in, "stencil graph JSON")->required();
    decompose_cmd->add_option("--out-prefix", dec_prefix, "output file prefix")->required();

    std::string e_pred, e_truth;
    auto* eval_cmd = app.add_subcommand("eval", "Score a predicted graph against ground truth");
    eval_cmd->add_option("--pred", e_pred, "predicted graph JSON (stencil or flat)")->required();
    eval_cmd->add_option("--truth", e_truth, "ground-truth stencil graph JSON")->required();

    std::size_t th_n = 0, th_v = 1, th_t = 1;
    auto* theory_cmd = app.add_subcommand("theory", "Sample-efficiency and complexity calculators");
    theory_cmd->add_option("--N", th_n, "grid side length")->required();
    theory_cmd->add_option("--V", th_v, "variable count");
    theory_cmd->add_option("--T", th_t, "time steps");

    std::string sa_spec, sa_out;
    auto* sweep_adr = app.add_subcommand("sweep-adr", "Run the PDE verification sweep (resumable)");
    sweep_adr->add_option("--spec", sa_spec, "sweep spec JSON")->required();
    sweep_adr->add_option("--out", sa_out, "results CSV path")->required();

    std::string b_out = "bench_out", b_backends = "both";
    std::vector<int> b_vars{1, 2, 3, 4};
    std::vector<double> b_densities{0.10, 0.20};
    int b_replicates = 20;
    std::uint64_t b_seed = 0x6d636173746c65ULL;
    bool b_chain = false;
    auto* bench_cmd = app.add_subcommand("bench", "Desk-scale benchmark of all methods");
    bench_cmd->add_option("--out", b_out, "output directory");
    bench_cmd->add_option("--v-list", b_vars, "variable counts to sweep");
    bench_cmd->add_option("--densities", b_densities, "link densities to sweep");
    bench_cmd->add_option("--replicates", b_replicates, "systems per cell");
    bench_cmd->add_option("--backends", b_backends, "ci | lasso | both");
    bench_cmd->add_option("--seed", b_seed, "master seed");
    bench_cmd->add_flag("--chain", b_chain, "also run the chain-recall sweep");

    for (auto* cmd : {sweep_adr, bench_cmd})
        cmd->add_option("--jobs", jobs, "worker threads (default: MCASTLE_JOBS or 1)");

    try {
        app.parse(argc, argv);
        CLI::App* sub = app.get_subcommands().front();
        if ((sub == sweep_adr || sub == bench_cmd) && sub->count("--jobs") == 0)
            jobs = default_jobs();

        if (sub == gen_var) return run_gen_var(gv_spec, gv_out, gv_replicates);
        if (sub == discover_cmd) return run_discover(d_in, d_method, d_backend, d_config, d_out);
        if (sub == decompose_cmd) return run_decompose(dec_in, dec_prefix);
        if (sub == eval_cmd) return run_eval(e_pred, e_truth);
        if (sub == theory_cmd) return run_theory(th_n, th_v, th_t);
        if (sub == sweep_adr) return run_sweep_adr(sa_spec, sa_out, jobs);
        if (sub == bench_cmd)
            return run_bench(b_out, b_vars, b_densities, b_replicates, b_backends, b_seed, jobs,
                             b_chain);
        raise(Errc::usage, "no subcommand selected");
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
