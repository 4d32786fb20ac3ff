#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "analysis/bounds.hpp"
#include "analysis/pieces.hpp"
#include "constructions/embeddings.hpp"
#include "constructions/mfe.hpp"
#include "constructions/qc.hpp"
#include "constructions/verify.hpp"
#include "io/csv.hpp"
#include "io/manifest.hpp"
#include "io/svg_plot.hpp"
#include "nn/serialize.hpp"
#include "protocol/disjointness.hpp"
#include "training/sweep.hpp"
#include "util/rng.hpp"

namespace {

constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
    std::string out_dir;
    bool quiet = false;
};

void add_common(CLI::App* sub, CommonFlags& common) {
    sub->add_option("--out-dir", common.out_dir,
                    "artifact directory (default $COUNTLAB_OUT_DIR or .)");
    sub->add_flag("--quiet", common.quiet, "suppress progress lines");
}

std::string resolve_out_dir(const CommonFlags& common) {
    std::string dir = common.out_dir.empty() ? io::default_out_dir() : common.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

// ---- construct ----

struct ConstructFlags {
    CommonFlags common;
    std::string task;
    std::string embedding = "onehot";
    int m = 0;
    int d = 0; // 0 = unset, resolved per task
    int n = 0;
    uint64_t seed = 0;
    bool exhaustive = false;
    long long random_count = 0; // 0 = unset, defaults to 1000
};

int run_construct(const ConstructFlags& f) {
    const std::string dir = resolve_out_dir(f.common);

    constructions::ConstructionReport report;
    constructions::VerifyTask vtask = constructions::VerifyTask::qc;
    int d_used = 0;
    if (f.task == "qc-hist") {
        if (f.embedding != "onehot")
            throw std::invalid_argument("qc-hist fixes its own one-hot embedding layout");
        report = constructions::build_qc_histogram(f.m, f.n);
        d_used = f.m;
    } else if (f.task == "qc-attend") {
        constructions::EmbeddingSet emb;
        util::Rng seeds(f.seed);
        const uint64_t emb_seed = seeds.next_u64();
        if (f.embedding == "rademacher") {
            if (f.d < 1)
                throw std::invalid_argument("qc-attend with rademacher embeddings needs --d");
            emb = analysis::random_rademacher_embeddings(f.m, f.d, emb_seed);
        } else {
            const int d = f.d > 0 ? f.d : f.m;
            emb = constructions::one_hot_embeddings(f.m, d);
        }
        d_used = emb.d;
        report = constructions::build_qc_countattend(f.m, emb.d, f.n, emb);
    } else if (f.task == "mfe-hist") {
        if (f.embedding != "onehot")
            throw std::invalid_argument("mfe-hist fixes its own one-hot embedding layout");
        report = constructions::build_mfe_histogram(f.m, f.n);
        d_used = f.m;
        vtask = constructions::VerifyTask::mfe;
    } else { // mfe-2layer
        if (f.embedding != "onehot")
            throw std::invalid_argument("mfe-2layer requires one-hot embeddings");
        const int d = f.d > 0 ? f.d : f.m;
        const auto emb = constructions::one_hot_embeddings(f.m, d);
        report = constructions::build_mfe_two_layer(f.m, d, f.n, emb);
        d_used = d;
        vtask = constructions::VerifyTask::mfe_two_layer;
    }

    constructions::VerifyReport verified;
    std::string mode;
    if (f.exhaustive) {
        mode = "exhaustive";
        verified = constructions::verify_exhaustive(report, vtask, f.m, f.n);
    } else {
        mode = "random";
        const long long count = f.random_count > 0 ? f.random_count : 1000;
        util::Rng seeds(f.seed);
        seeds.next_u64(); // embedding stream
        verified = constructions::verify_random(report, vtask, f.m, f.n, count, seeds.next_u64());
    }

    std::string stem = f.task;
    std::replace(stem.begin(), stem.end(), '-', '_');
    const std::string model_path = dir + "/" + stem + "_model.json";
    const std::string report_path = dir + "/" + stem + "_report.json";
    nn::save_model(report.model, model_path);

    nlohmann::json rep;
    rep["task"] = f.task;
    rep["m"] = f.m;
    rep["d"] = d_used;
    rep["n"] = f.n;
    rep["embedding"] = f.embedding;
    rep["certified_n"] = report.certified_n;
    rep["mlp_width"] = report.mlp_width;
    rep["temperature"] = report.temperature;
    rep["max_cross_inner"] = report.max_cross_inner;
    rep["verification"] = {{"mode", mode},
                           {"instances", verified.instances},
                           {"failures", verified.failures},
                           {"max_abs_error", verified.max_abs_error}};
    write_text(report_path, rep.dump(2) + "\n");

    if (!f.common.quiet)
        std::printf("%s m=%d d=%d n=%d: %lld/%lld exact, max abs error %.3g\n", f.task.c_str(),
                    f.m, d_used, f.n, verified.instances - verified.failures, verified.instances,
                    verified.max_abs_error);
    return verified.failures == 0 ? 0 : kExitVerificationFailure;
}

// ---- analyze ----

struct AnalyzeFlags {
    CommonFlags common;
    std::string check;
    std::string csv_path;
    int m = 0;
    int d = 0;
    std::vector<int> n_list;
    double t = -1;
    double j = -1;
    double eps = 0.5;
    uint64_t seed = 0;
};

int run_analyze(const AnalyzeFlags& f) {
    const std::string dir = resolve_out_dir(f.common);
    const std::string path =
        f.csv_path.empty() ? dir + "/analyze_" + f.check + ".csv" : f.csv_path;

    io::Csv csv;
    if (f.check == "welch") {
        if (f.m < 1 || f.d < 1) throw std::invalid_argument("welch needs --m and --d");
        const double bound = analysis::welch_lower_bound(f.m, f.d);
        const auto emb = analysis::random_rademacher_embeddings(f.m, f.d, f.seed);
        const double measured = analysis::max_pairwise_inner(emb).value;
        csv.header = {"m", "d", "welch_bound", "rademacher_max_inner"};
        csv.rows.push_back({std::to_string(f.m), std::to_string(f.d), io::format_double(bound),
                            io::format_double(measured)});
    } else if (f.check == "hoeffding") {
        if (f.d < 1 || f.t < 0) throw std::invalid_argument("hoeffding needs --d and --t");
        csv.header = {"d", "t", "bound"};
        csv.rows.push_back({std::to_string(f.d), io::format_double(f.t),
                            io::format_double(analysis::hoeffding_bound(f.d, f.t))});
    } else if (f.check == "pieces") {
        if (f.n_list.empty()) throw std::invalid_argument("pieces needs --n or --n-list");
        csv.header = {"n", "eps", "pieces", "claimed_lower_bound"};
        for (int n : f.n_list)
            csv.rows.push_back({std::to_string(n), io::format_double(f.eps),
                                std::to_string(analysis::min_pieces_inverse(n, f.eps)),
                                std::to_string(analysis::lemma1_lower_bound(n))});
    } else { // temperature
        if (f.n_list.size() != 1 || f.j < 0)
            throw std::invalid_argument("temperature needs --n and --j");
        const int n = f.n_list[0];
        csv.header = {"n", "j", "temperature"};
        csv.rows.push_back({std::to_string(n), io::format_double(f.j),
                            io::format_double(analysis::required_temperature(n, f.j))});
    }
    io::write_csv(path, csv);

    if (!f.common.quiet) {
        for (const auto& row : csv.rows) {
            std::string line;
            for (size_t i = 0; i < row.size(); ++i)
                line += csv.header[i] + "=" + row[i] + (i + 1 < row.size() ? " " : "");
            std::printf("%s\n", line.c_str());
        }
    }
    return 0;
}

// ---- sweep ----

struct SweepFlags {
    CommonFlags common;
    std::string task;
    std::vector<int> d_list = {8, 32};
    std::vector<int> m_list;
    int steps = 20000;
    int expected_count = training::kDefaultExpectedCount;
    uint64_t seed = 1;
    double threshold = 0.8;
    std::string out_path;
    std::string svg_path;
};

int run_sweep(const SweepFlags& f) {
    const std::string dir = resolve_out_dir(f.common);
    const std::string results_path = f.out_path.empty() ? dir + "/results.csv" : f.out_path;
    const std::string thresholds_path =
        (std::filesystem::path(results_path).parent_path() / "thresholds.csv").string();

    const training::TaskKind task =
        f.task == "qc" ? training::TaskKind::qc : training::TaskKind::mfe;
    training::TrainConfig base;
    base.steps = f.steps;
    base.seed = f.seed;

    io::Csv results;
    results.header = {"task", "d", "m", "n", "steps", "seed", "accuracy"};
    io::Csv thresholds;
    thresholds.header = {"d", "m_thr"};

    for (int d : f.d_list) {
        const std::vector<int> grid = f.m_list.empty() ? training::default_m_grid(d) : f.m_list;
        training::SweepHooks hooks;
        hooks.on_cell = [&](const training::SweepCell& cell) {
            if (!f.common.quiet)
                std::printf("%s d=%d m=%d acc=%.4f%s\n", f.task.c_str(), cell.d, cell.m,
                            cell.accuracy, cell.failed ? " diverged" : "");
        };
        const auto result = training::sweep_mthr(task, {d}, grid, base, f.threshold,
                                                 f.expected_count, &hooks);
        for (const auto& cell : result.grid)
            results.rows.push_back({f.task, std::to_string(cell.d), std::to_string(cell.m),
                                    std::to_string(cell.n), std::to_string(f.steps),
                                    std::to_string(f.seed), io::format_double(cell.accuracy)});
        for (const auto& thr : result.thresholds)
            thresholds.rows.push_back(
                {std::to_string(thr.d), thr.m_thr ? std::to_string(*thr.m_thr) : "none"});
    }
    io::write_csv(results_path, results);
    io::write_csv(thresholds_path, thresholds);

    if (!f.svg_path.empty()) {
        io::Series series;
        series.label = "m_thr";
        for (const auto& row : thresholds.rows)
            if (row[1] != "none") series.points.push_back({std::stod(row[0]), std::stod(row[1])});
        if (series.points.empty()) {
            std::fprintf(stderr, "no finite thresholds to plot; skipping %s\n",
                         f.svg_path.c_str());
        } else {
            io::write_line_plot(f.svg_path, "counting phase transition (" + f.task + ")",
                                "model width d", "threshold vocabulary m_thr", {series});
        }
    }
    return 0;
}

// ---- protocol ----

struct ProtocolFlags {
    CommonFlags common;
    int n_bits = 4;
    int p = 32;
    bool exhaustive = false;
    long long random_count = 0;
    uint64_t seed = 0;
};

int run_protocol(const ProtocolFlags& f) {
    const std::string dir = resolve_out_dir(f.common);
    if (f.n_bits < 1) throw std::invalid_argument("--nbits must be >= 1");
    if (f.exhaustive && f.n_bits > 10)
        throw std::invalid_argument("exhaustive enumeration caps at --nbits 10; use --random");

    const int vocab = 3 * f.n_bits + 1;
    const auto embeddings = constructions::one_hot_embeddings(vocab, vocab);
    const auto heads = protocol::histogram_heads(vocab);

    std::vector<protocol::DisjointnessInstance> instances;
    if (f.exhaustive) {
        const long long total = 1LL << (2 * f.n_bits);
        for (long long bits = 0; bits < total; ++bits) {
            protocol::DisjointnessInstance inst;
            inst.a.resize(f.n_bits);
            inst.b.resize(f.n_bits);
            for (int i = 0; i < f.n_bits; ++i) {
                inst.a[i] = (bits >> i) & 1;
                inst.b[i] = (bits >> (f.n_bits + i)) & 1;
            }
            instances.push_back(std::move(inst));
        }
    } else {
        const long long count = f.random_count > 0 ? f.random_count : 100;
        util::Rng rng(f.seed);
        for (long long k = 0; k < count; ++k) {
            protocol::DisjointnessInstance inst;
            inst.a.resize(f.n_bits);
            inst.b.resize(f.n_bits);
            for (int i = 0; i < f.n_bits; ++i) {
                inst.a[i] = static_cast<uint8_t>(rng.next_below(2));
                inst.b[i] = static_cast<uint8_t>(rng.next_below(2));
            }
            instances.push_back(std::move(inst));
        }
    }

    nlohmann::json transcripts = nlohmann::json::array();
    long long agreements = 0;
    long long total_bits = 0;
    for (const auto& inst : instances) {
        const auto transcript = protocol::run_protocol(inst, heads, embeddings, f.p);
        const int oracle = protocol::disjointness_oracle(inst);
        agreements += transcript.output == oracle;
        total_bits = transcript.total_bits;

        nlohmann::json t;
        t["a"] = inst.a;
        t["b"] = inst.b;
        t["oracle"] = oracle;
        t["output"] = transcript.output;
        t["agree"] = transcript.output == oracle;
        t["total_bits"] = transcript.total_bits;
        t["saturated"] = transcript.saturated;
        t["n_bits"] = transcript.n_bits;
        t["decoded_mfe"] = transcript.decoded_mfe;
        if (!transcript.warning.empty()) t["warning"] = transcript.warning;
        nlohmann::json msgs = nlohmann::json::array();
        for (const auto& msg : transcript.messages)
            msgs.push_back({{"sender", std::string(1, msg.sender)},
                            {"bits", msg.bits},
                            {"values", msg.values}});
        t["messages"] = std::move(msgs);
        transcripts.push_back(std::move(t));
    }
    const double agreement_rate =
        instances.empty() ? 0.0 : static_cast<double>(agreements) / instances.size();

    write_text(dir + "/protocol_transcripts.json", transcripts.dump(2) + "\n");
    io::Csv summary;
    summary.header = {"nbits", "p", "d", "h", "total_bits", "agreement_rate"};
    summary.rows.push_back({std::to_string(f.n_bits), std::to_string(f.p), std::to_string(vocab),
                            std::to_string(heads.size()), std::to_string(total_bits),
                            io::format_double(agreement_rate)});
    io::write_csv(dir + "/protocol_summary.csv", summary);

    if (!f.common.quiet)
        std::printf("nbits=%d p=%d: %lld/%zu agree with the oracle, %lld bits per transcript\n",
                    f.n_bits, f.p, agreements, instances.size(), total_bits);
    return agreements == static_cast<long long>(instances.size()) ? 0
                                                                  : kExitVerificationFailure;
}

// ---- plot ----

struct PlotFlags {
    CommonFlags common;
    std::string csv_path;
    std::string kind;
    std::string out_path;
};

int run_plot(const PlotFlags& f) {
    const std::string dir = resolve_out_dir(f.common);
    const std::string out =
        f.out_path.empty() ? dir + "/" + f.kind + ".svg" : f.out_path;

    const io::Csv csv = io::read_csv(f.csv_path);
    if (csv.rows.empty()) throw std::invalid_argument("empty CSV: " + f.csv_path);

    if (f.kind == "mthr") {
        if (csv.header != std::vector<std::string>{"d", "m_thr"})
            throw std::invalid_argument("mthr expects columns d,m_thr");
        io::Series series;
        series.label = "m_thr";
        for (const auto& row : csv.rows)
            if (row[1] != "none") series.points.push_back({std::stod(row[0]), std::stod(row[1])});
        if (series.points.empty())
            throw std::invalid_argument("no finite thresholds in " + f.csv_path);
        io::write_line_plot(out, "counting phase transition", "model width d",
                            "threshold vocabulary m_thr", {series});
    } else { // pieces
        if (csv.header != std::vector<std::string>{"n", "eps", "pieces", "claimed_lower_bound"})
            throw std::invalid_argument("pieces expects columns n,eps,pieces,claimed_lower_bound");
        io::Series pieces, claimed;
        pieces.label = "pieces";
        claimed.label = "claimed lower bound";
        for (const auto& row : csv.rows) {
            pieces.points.push_back({std::stod(row[0]), std::stod(row[2])});
            claimed.points.push_back({std::stod(row[0]), std::stod(row[3])});
        }
        // least-squares slope of pieces vs n, annotated in the title
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [x, y] : pieces.points) {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double count = static_cast<double>(pieces.points.size());
        const double denom = count * sxx - sx * sx;
        char title[96];
        if (denom > 0)
            std::snprintf(title, sizeof title, "inverse approximation pieces (slope %.3g)",
                          (count * sxy - sx * sy) / denom);
        else
            std::snprintf(title, sizeof title, "inverse approximation pieces");
        io::write_line_plot(out, title, "grid size n", "pieces", {pieces, claimed});
    }
    if (!f.common.quiet) std::printf("wrote %s\n", out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"counting transformer laboratory"};
    app.require_subcommand(1);

    ConstructFlags cf;
    auto* construct = app.add_subcommand(
        "construct", "build a hand-set transformer and verify it against the exact oracle");
    construct->add_option("--task", cf.task, "construction to build")
        ->required()
        ->check(CLI::IsMember({"qc-hist", "qc-attend", "mfe-hist", "mfe-2layer"}));
    construct->add_option("--m", cf.m, "vocabulary size")->required()->check(CLI::PositiveNumber);
    construct->add_option("--d", cf.d, "embedding dimension (qc-attend, mfe-2layer)")
        ->check(CLI::PositiveNumber);
    construct->add_option("--n", cf.n, "sequence length")->required()->check(CLI::PositiveNumber);
    construct->add_option("--embedding", cf.embedding, "token embedding family")
        ->check(CLI::IsMember({"onehot", "rademacher"}));
    construct->add_option("--seed", cf.seed, "master seed for embeddings and random checks");
    auto* cex = construct->add_flag("--exhaustive", cf.exhaustive, "check every m^n sequence");
    construct->add_option("--random", cf.random_count, "check this many random sequences")
        ->excludes(cex);
    add_common(construct, cf.common);

    AnalyzeFlags af;
    auto* analyze =
        app.add_subcommand("analyze", "evaluate a bound or oracle and write one CSV");
    analyze->add_option("--check", af.check, "which quantity to compute")
        ->required()
        ->check(CLI::IsMember({"welch", "hoeffding", "pieces", "temperature"}));
    analyze->add_option("--m", af.m, "number of vectors (welch)")->check(CLI::PositiveNumber);
    analyze->add_option("--d", af.d, "dimension (welch, hoeffding)")->check(CLI::PositiveNumber);
    analyze->add_option("--n", af.n_list, "grid size(s) (pieces, temperature)")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--t", af.t, "tail threshold (hoeffding)");
    analyze->add_option("--j", af.j, "max cross inner product (temperature)");
    analyze->add_option("--eps", af.eps, "approximation error (pieces, default 0.5)");
    analyze->add_option("--seed", af.seed, "seed for the welch rademacher draw");
    analyze->add_option("--csv", af.csv_path, "output CSV path");
    add_common(analyze, af.common);

    SweepFlags sf;
    auto* sweep = app.add_subcommand(
        "sweep", "train across a (d, m) grid and report threshold vocabulary sizes");
    sweep->add_option("--task", sf.task, "training task")
        ->required()
        ->check(CLI::IsMember({"qc", "mfe"}));
    sweep->add_option("--d-list", sf.d_list, "model widths")->delimiter(',');
    sweep->add_option("--m-list", sf.m_list, "vocabulary grid (default: 8 points in [4, 4d])")
        ->delimiter(',');
    sweep->add_option("--steps", sf.steps, "training steps per cell")->check(CLI::PositiveNumber);
    sweep->add_option("--expected-count", sf.expected_count, "n = c * m sequence length factor")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sf.seed, "master seed");
    sweep->add_option("--threshold", sf.threshold, "accuracy threshold for m_thr");
    sweep->add_option("--out", sf.out_path, "results CSV path (thresholds.csv written beside)");
    sweep->add_option("--svg", sf.svg_path, "also plot m_thr vs d");
    add_common(sweep, sf.common);

    ProtocolFlags pf;
    auto* proto = app.add_subcommand(
        "protocol", "play the quantized two-party counting protocol against the oracle");
    proto->add_option("--nbits", pf.n_bits, "instance size")->required();
    proto->add_option("--p", pf.p, "bits per transmitted value")->check(CLI::Range(2, 62));
    auto* pex = proto->add_flag("--exhaustive", pf.exhaustive, "play every instance");
    proto->add_option("--random", pf.random_count, "play this many random instances")
        ->excludes(pex);
    proto->add_option("--seed", pf.seed, "seed for random instances");
    add_common(proto, pf.common);

    PlotFlags lf;
    auto* plot = app.add_subcommand("plot", "render a CSV produced by sweep or analyze to SVG");
    plot->add_option("--csv", lf.csv_path, "input CSV")->required();
    plot->add_option("--kind", lf.kind, "plot family")
        ->required()
        ->check(CLI::IsMember({"mthr", "pieces"}));
    plot->add_option("--out", lf.out_path, "output SVG path");
    add_common(plot, lf.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    CLI::App* active = app.get_subcommands().front();
    const CommonFlags* common = &cf.common;
    uint64_t seed = cf.seed;
    if (active == analyze) {
        common = &af.common;
        seed = af.seed;
    } else if (active == sweep) {
        common = &sf.common;
        seed = sf.seed;
    } else if (active == proto) {
        common = &pf.common;
        seed = pf.seed;
    } else if (active == plot) {
        common = &lf.common;
        seed = 0;
    }

    const auto start = std::chrono::steady_clock::now();
    int code = 0;
    std::string error;
    try {
        if (active == construct)
            code = run_construct(cf);
        else if (active == analyze)
            code = run_analyze(af);
        else if (active == sweep)
            code = run_sweep(sf);
        else if (active == proto)
            code = run_protocol(pf);
        else
            code = run_plot(lf);
    } catch (const std::exception& ex) {
        error = ex.what();
        code = kExitUsage;
    }

    io::Manifest manifest;
    manifest.subcommand = active->get_name();
    for (const CLI::Option* opt : active->get_options()) {
        if (opt->count() == 0) continue;
        std::string value;
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
        manifest.flags.push_back({opt->get_name(), value.empty() ? "true" : value});
    }
    manifest.seed = seed;
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.exit_code = code;
    try {
        io::write_manifest(resolve_out_dir(*common) + "/manifest.json", manifest);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "manifest write failed: %s\n", ex.what());
        if (code == 0) code = kExitUsage;
    }

    if (!error.empty()) std::fprintf(stderr, "error: %s\n", error.c_str());
    return code;
}
