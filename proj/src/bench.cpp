#include "mcastle/bench.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mcastle/baselines.hpp"
#include "mcastle/errors.hpp"
#include "mcastle/rng.hpp"
#include "mcastle/stats.hpp"
#include "mcastle/var_bench.hpp"

namespace mcastle {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };
    std::vector<std::thread> threads;
    const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

int links_for_density(double density, int n_vars) {
    const double slots = 9.0 * n_vars * n_vars;
    return std::max(1, static_cast<int>(std::lround(density * slots)));
}

std::string trim_number(double x) {
    std::ostringstream os;
    os << x;  // default precision keeps sweep grid values exact and short
    return os.str();
}

}  // namespace

VarBenchSummary run_var_bench(const VarBenchConfig& cfg) {
    if (cfg.replicates < 1) raise(Errc::validation, "need at least one replicate");
    if (cfg.var_counts.empty() || cfg.densities.empty())
        raise(Errc::validation, "empty sweep axis");

    struct Task {
        int n_vars;
        double density;
        int n_links;
        int replicate;
    };
    std::vector<Task> tasks;
    for (int v : cfg.var_counts)
        for (double d : cfg.densities)
            for (int r = 0; r < cfg.replicates; ++r)
                tasks.push_back({v, d, links_for_density(d, v), r});

    std::vector<VarBenchRow> rows(tasks.size());
    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t idx) {
        const Task& task = tasks[idx];
        GenSpec spec;
        spec.n_grid = cfg.n_grid;
        spec.n_vars = task.n_vars;
        spec.n_links = task.n_links;
        spec.n_time = cfg.n_time;
        spec.max_attempts = 2000;
        spec.seed = hash64(cfg.seed, 2 * idx);
        const GeneratedSystem sys = generate_system(spec);
        GenSpec sim_spec = spec;
        sim_spec.seed = hash64(cfg.seed, 2 * idx + 1);  // fresh stream for the noise
        const GridTensor x = simulate(sys.a, sim_spec);
        const StencilGraph truth = ground_truth_graph(sys.ndm);

        VarBenchRow row;
        row.n_vars = task.n_vars;
        row.density = task.density;
        row.n_links = task.n_links;
        row.replicate = task.replicate;
        row.seed = spec.seed;
        row.mcastle = graph_f1(discover(x, cfg.pip), truth);
        row.cartesian = graph_f1(cartesian_discover(x, cfg.pip), truth);
        row.direct = direct_f1(direct_discover(x, cfg.pip), truth);
        rows[idx] = row;
    });

    VarBenchSummary summary;
    summary.rows = std::move(rows);
    summary.var_counts = cfg.var_counts;

    for (int v : cfg.var_counts) {
        std::vector<double> precs, f1s;
        for (const auto& row : summary.rows)
            if (row.n_vars == v) {
                precs.push_back(row.mcastle.precision);
                f1s.push_back(row.mcastle.f1);
            }
        summary.precision_by_v.push_back(mean_of(precs));
        summary.f1_by_v.push_back(mean_of(f1s));
    }

    std::vector<double> vs, f1s;
    for (const auto& row : summary.rows) {
        vs.push_back(static_cast<double>(row.n_vars));
        f1s.push_back(row.mcastle.f1);
    }
    summary.spearman_f1_vs_v = spearman_rho(vs, f1s);

    MethodOrdering& ord = summary.ordering;
    std::vector<double> ms, cs, ds;
    for (const auto& row : summary.rows) {
        if (row.n_vars < 2) continue;
        ms.push_back(row.mcastle.f1);
        cs.push_back(row.cartesian.f1);
        ds.push_back(row.direct.f1);
        if (row.mcastle.f1 > row.cartesian.f1)
            ++ord.wins_mc;
        else if (row.mcastle.f1 < row.cartesian.f1)
            ++ord.losses_mc;
        if (row.cartesian.f1 > row.direct.f1)
            ++ord.wins_cd;
        else if (row.cartesian.f1 < row.direct.f1)
            ++ord.losses_cd;
    }
    if (!ms.empty()) {
        ord.mean_mcastle = mean_of(ms);
        ord.mean_cartesian = mean_of(cs);
        ord.mean_direct = mean_of(ds);
        ord.p_mcastle_over_cartesian = sign_test_p(ord.wins_mc, ord.losses_mc);
        ord.p_cartesian_over_direct = sign_test_p(ord.wins_cd, ord.losses_cd);
    }
    return summary;
}

const char* const kVarBenchCsvHeader =
    "n_vars,density,n_links,replicate,seed,"
    "tp_m,fp_m,fn_m,precision_m,recall_m,f1_m,"
    "tp_c,fp_c,fn_c,precision_c,recall_c,f1_c,"
    "tp_d,fp_d,fn_d,precision_d,recall_d,f1_d";

std::string var_bench_csv_row(const VarBenchRow& row) {
    std::ostringstream os;
    os.precision(17);
    os << row.n_vars << ',' << row.density << ',' << row.n_links << ',' << row.replicate << ','
       << row.seed;
    for (const F1Result* r : {&row.mcastle, &row.cartesian, &row.direct})
        os << ',' << r->tp << ',' << r->fp << ',' << r->fn << ',' << r->precision << ','
           << r->recall << ',' << r->f1;
    return os.str();
}

std::vector<ChainPoint> run_chain_sweep(const ChainSweepConfig& cfg) {
    if (cfg.replicates < 1) raise(Errc::validation, "need at least one replicate");
    struct Task {
        int n_vars;
        double coefficient;
        int replicate;
    };
    std::vector<Task> tasks;
    for (int v : cfg.var_counts)
        for (double c : cfg.coefficients)
            for (int r = 0; r < cfg.replicates; ++r) tasks.push_back({v, c, r});

    struct Counts {
        std::size_t tp = 0, fn = 0;
    };
    std::vector<Counts> counts(tasks.size());
    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t idx) {
        const Task& task = tasks[idx];
        const GeneratedSystem sys =
            generate_chain_system(task.n_vars, task.coefficient, hash64(cfg.seed, 2 * idx));
        GenSpec sim_spec;
        sim_spec.n_grid = cfg.n_grid;
        sim_spec.n_vars = task.n_vars;
        sim_spec.n_links = std::max(1, task.n_vars - 1);
        sim_spec.n_time = cfg.n_time;
        sim_spec.seed = hash64(cfg.seed, 2 * idx + 1);
        SimOptions opts;
        // chain states grow geometrically in the coefficient; the default
        // guard is meant for near-unit-radius systems, not these
        opts.instability_limit = 1e100;
        const GridTensor x = simulate(sys.a, sim_spec, opts);

        PipConfig pip;
        pip.backend = PipBackend::lasso;
        pip.lambda_w = cfg.lambda_w;
        pip.w_threshold = cfg.w_threshold;
        const StencilGraph truth = ground_truth_graph(sys.ndm);
        const F1Result f1 = graph_f1(discover(x, pip), truth);
        counts[idx] = {f1.tp, f1.fn};
    });

    std::vector<ChainPoint> points;
    for (int v : cfg.var_counts)
        for (double c : cfg.coefficients) {
            std::size_t tp = 0, fn = 0;
            for (std::size_t i = 0; i < tasks.size(); ++i)
                if (tasks[i].n_vars == v && tasks[i].coefficient == c) {
                    tp += counts[i].tp;
                    fn += counts[i].fn;
                }
            ChainPoint pt;
            pt.n_vars = v;
            pt.coefficient = c;
            pt.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
            points.push_back(pt);
        }
    return points;
}

namespace {

std::string adr_experiment_id(double d, double v, double theta) {
    return "D" + trim_number(d) + "_v" + trim_number(v) + "_th" + trim_number(theta);
}

std::optional<AdrMetrics> parse_metrics_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    if (fields.size() != 10) return std::nullopt;
    try {
        AdrMetrics m;
        m.experiment_id = fields[0];
        const std::size_t tp = std::stoull(fields[1]);
        const std::size_t fp = std::stoull(fields[2]);
        const std::size_t fn = std::stoull(fields[3]);
        m.reaction_f1 = f1_from_counts(tp, fp, fn);
        m.theta_true = std::stod(fields[7]);
        if (!fields[8].empty()) m.theta_hat = std::stod(fields[8]);
        if (!fields[9].empty()) m.delta_theta = std::stod(fields[9]);
        return m;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// temp-file-then-rename so readers never observe a half-written file
void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::io, "cannot open " + tmp);
        out << content;
        if (!out.flush()) raise(Errc::io, "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) raise(Errc::io, "cannot replace " + path + ": " + ec.message());
}

}  // namespace

AdrSweepSummary run_adr_sweep(const AdrSweepConfig& cfg) {
    struct Task {
        double d, v, theta;
        std::string id;
    };
    std::vector<Task> tasks;
    for (double d : cfg.diffusions)
        for (double v : cfg.speeds)
            for (double theta : cfg.angles_deg)
                tasks.push_back({d, v, theta, adr_experiment_id(d, v, theta)});

    std::vector<std::optional<AdrMetrics>> done(tasks.size());

    // resume: accept a row only when both the done-list and the CSV agree
    if (!cfg.out_csv.empty() && std::filesystem::exists(cfg.out_csv)) {
        std::ifstream in(cfg.out_csv);
        std::string line;
        if (!std::getline(in, line) || line != kMetricsCsvHeader)
            raise(Errc::format, "existing results file has a different schema: " + cfg.out_csv);
        std::map<std::string, AdrMetrics> by_id;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (auto m = parse_metrics_row(line)) by_id.emplace(m->experiment_id, *m);
        }
        std::set<std::string> done_ids;
        std::ifstream done_in(cfg.out_csv + ".done");
        while (std::getline(done_in, line))
            if (!line.empty()) done_ids.insert(line);
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto it = by_id.find(tasks[i].id);
            if (it != by_id.end() && done_ids.count(tasks[i].id)) done[i] = it->second;
        }
    }

    std::mutex io_mutex;
    const auto flush_files = [&] {
        if (cfg.out_csv.empty()) return;
        std::ostringstream csv, done_list;
        csv << kMetricsCsvHeader << '\n';
        for (const auto& m : done)
            if (m) {
                csv << metrics_csv_row(*m) << '\n';
                done_list << m->experiment_id << '\n';
            }
        write_file_atomic(cfg.out_csv, csv.str());
        write_file_atomic(cfg.out_csv + ".done", done_list.str());
    };

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (!done[i]) pending.push_back(i);

    parallel_for(pending.size(), cfg.jobs, [&](std::size_t k) {
        const std::size_t i = pending[k];
        AdrSpec spec;
        spec.d1 = spec.d2 = tasks[i].d;
        spec.speed = tasks[i].v;
        spec.theta_deg = tasks[i].theta;
        spec.alpha = cfg.alpha;
        spec.beta = cfg.beta;
        AdrOutcome oc = run_adr_experiment(spec, cfg.pip);
        oc.metrics.experiment_id = tasks[i].id;
        std::lock_guard<std::mutex> lock(io_mutex);
        done[i] = oc.metrics;
        flush_files();
    });

    AdrSweepSummary summary;
    std::vector<double> f1s;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        summary.rows.push_back(*done[i]);
        f1s.push_back(done[i]->reaction_f1.f1);
    }
    summary.median_f1 = median_of(f1s);
    summary.mean_f1 = mean_of(f1s);

    std::vector<double> sorted_d = cfg.diffusions;
    std::sort(sorted_d.begin(), sorted_d.end());
    const std::set<double> low_half(sorted_d.begin(),
                                    sorted_d.begin() + static_cast<long>(sorted_d.size() / 2));
    std::vector<double> low_deltas;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (low_half.count(tasks[i].d) && summary.rows[i].delta_theta)
            low_deltas.push_back(*summary.rows[i].delta_theta);
    summary.median_delta_low_d = low_deltas.empty() ? 180.0 : median_of(low_deltas);

    std::vector<double> d_axis, share_axis;
    for (double d : cfg.diffusions) {
        std::size_t total = 0, outliers = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].d != d) continue;
            ++total;
            const auto& delta = summary.rows[i].delta_theta;
            if (!delta || *delta > 45.0) ++outliers;
        }
        d_axis.push_back(d);
        share_axis.push_back(total == 0 ? 0.0 : static_cast<double>(outliers) / total);
    }
    summary.outlier_share_by_d = share_axis;
    summary.outlier_trend_rho =
        d_axis.size() >= 2 ? spearman_rho(d_axis, share_axis) : 0.0;
    return summary;
}

}  // namespace mcastle
