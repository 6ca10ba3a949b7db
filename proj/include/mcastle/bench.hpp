#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mcastle/adr_sim.hpp"
#include "mcastle/graph_analysis.hpp"
#include "mcastle/pip.hpp"

namespace mcastle {

// Desk-scale spatial VAR benchmark: random stable systems per (variable
// count, link density) cell, simulated once each, discovered by all three
// methods, scored against the generating stencil.
struct VarBenchConfig {
    int n_grid = 4;
    int n_time = 1000;
    std::vector<int> var_counts = {1, 2, 3};
    std::vector<double> densities = {0.10, 0.20};  // link density E / (9 V^2)
    int replicates = 20;
    std::uint64_t seed = 0x6d636173746c65ULL;
    PipConfig pip;
    int jobs = 1;
};

struct VarBenchRow {
    int n_vars = 0;
    double density = 0.0;
    int n_links = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    F1Result mcastle, cartesian, direct;
};

// Paired comparison over replicates (higher F1 wins; ties dropped).
struct MethodOrdering {
    double mean_mcastle = 0.0, mean_cartesian = 0.0, mean_direct = 0.0;
    std::size_t wins_mc = 0, losses_mc = 0;  // mcastle vs cartesian
    std::size_t wins_cd = 0, losses_cd = 0;  // cartesian vs direct
    double p_mcastle_over_cartesian = 1.0;   // exact one-sided sign test
    double p_cartesian_over_direct = 1.0;
};

struct VarBenchSummary {
    std::vector<VarBenchRow> rows;          // canonical task order
    std::vector<int> var_counts;            // axis for the per-V aggregates
    std::vector<double> precision_by_v;     // pooled over densities, main method
    std::vector<double> f1_by_v;
    double spearman_f1_vs_v = 0.0;          // per-replicate F1 against V
    MethodOrdering ordering;                // pooled over rows with V >= 2
};

VarBenchSummary run_var_bench(const VarBenchConfig& cfg);

extern const char* const kVarBenchCsvHeader;
std::string var_bench_csv_row(const VarBenchRow& row);

// Chain-recall sweep: single-parent chain systems at a shared coefficient,
// discovered by the sparse-regression backend; recall pooled per point.
struct ChainSweepConfig {
    std::vector<int> var_counts = {10, 50};
    std::vector<double> coefficients = {0.01, 0.1, 0.5, 1.0, 2.0};
    int replicates = 3;
    int n_grid = 4;
    int n_time = 1000;
    double lambda_w = 0.05;
    double w_threshold = 0.01;
    std::uint64_t seed = 0x636861696eULL;
    int jobs = 1;
};

struct ChainPoint {
    int n_vars = 0;
    double coefficient = 0.0;
    double recall = 0.0;
};

std::vector<ChainPoint> run_chain_sweep(const ChainSweepConfig& cfg);

// Verification sweep over the PDE parameter grid. When out_csv is set the
// sweep streams finished rows to it atomically and resumes past experiments
// listed in the companion "<out_csv>.done" file.
struct AdrSweepConfig {
    std::vector<double> diffusions = {0.005, 0.05, 0.2, 0.4};
    std::vector<double> speeds = {1.0, 2.0, 3.0};
    std::vector<double> angles_deg = {0.0, 30.0, 60.0, 90.0};
    double alpha = 1.0;
    double beta = 1.0;
    PipConfig pip;
    std::string out_csv;
    int jobs = 1;
};

struct AdrSweepSummary {
    std::vector<AdrMetrics> rows;  // canonical sweep order
    double median_f1 = 0.0;
    double mean_f1 = 0.0;
    double median_delta_low_d = 0.0;         // angle error over the lower-diffusion half
    std::vector<double> outlier_share_by_d;  // share with no angle or error > 45 degrees
    double outlier_trend_rho = 0.0;          // rank trend of that share against diffusion
};

AdrSweepSummary run_adr_sweep(const AdrSweepConfig& cfg);

// Run fn(0..count-1) on up to jobs threads; any task exception is rethrown
// after all workers drain. Task index assignment is dynamic but results must
// be written to per-index slots, keeping outputs order-independent.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace mcastle
