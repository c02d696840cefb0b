#include "dwlab/labcli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "dwlab/benchmarks.hpp"
#include "dwlab/io.hpp"
#include "dwlab/log.hpp"
#include "dwlab/maxmargin.hpp"
#include "dwlab/propcheck.hpp"
#include "dwlab/rng.hpp"
#include "dwlab/stats.hpp"

namespace dwlab::lab {

namespace fs = std::filesystem;

const char* to_string(Kind k) {
    switch (k) {
        case Kind::gen: return "gen";
        case Kind::train: return "train";
        case Kind::difficulty: return "difficulty";
        case Kind::bound: return "bound";
        case Kind::check: return "check";
        case Kind::report: return "report";
    }
    return "?";
}

Kind kind_from_string(const std::string& s) {
    for (auto k : {Kind::gen, Kind::train, Kind::difficulty, Kind::bound, Kind::check, Kind::report}) {
        if (s == to_string(k)) return k;
    }
    throw UsageError("unknown experiment kind: " + s);
}

json RunManifest::to_json() const {
    json arts = json::array();
    for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    return json{{"kind", kind},
                {"config_digest", config_digest},
                {"tool_version", tool_version},
                {"started_at", started_at},
                {"finished_at", finished_at},
                {"seed", seed},
                {"schema_version", schema_version},
                {"artifacts", arts}};
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.kind = j.at("kind").get<std::string>();
    m.config_digest = j.value("config_digest", "");
    m.tool_version = j.value("tool_version", "");
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.schema_version = j.at("schema_version").get<int>();
    for (const auto& a : j.at("artifacts")) {
        m.artifacts.push_back({a.at("path").get<std::string>(), a.at("sha256").get<std::string>(),
                               a.at("bytes").get<std::size_t>()});
    }
    return m;
}

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <typename T>
T parse_section(const json& cfg, const char* key, T fallback = T{}) {
    if (!cfg.contains(key)) return fallback;
    try {
        T out = fallback;
        from_json(cfg.at(key), out);
        return out;
    } catch (const json::exception& e) {
        throw UsageError(std::string("config section '") + key + "': " + e.what());
    }
}

std::uint64_t master_seed(const json& cfg) {
    if (!cfg.contains("seed") || !cfg.at("seed").is_number_integer()) {
        throw UsageError("config needs an integer 'seed'");
    }
    return cfg.at("seed").get<std::uint64_t>();
}

/// Overrides every nested "jobs" field of the estimator sections.
void apply_jobs(json& j, std::size_t jobs) {
    if (j.is_object()) {
        for (auto& [k, v] : j.items()) {
            if (k == "estimator" && v.is_object()) v["jobs"] = jobs;
            apply_jobs(v, jobs);
        }
    } else if (j.is_array()) {
        for (auto& v : j) apply_jobs(v, jobs);
    }
}

struct DatasetSource {
    std::optional<DatasetSpec> spec;  // absent for datasets loaded from disk
    Dataset data;
};

DatasetSpec benchmark_spec(const json& d, std::uint64_t seed) {
    const auto name = d.at("benchmark").get<std::string>();
    if (name == "standard") return standard_spec(seed, d.value("per_class", std::size_t{100}));
    if (name == "imbalanced") {
        return imbalanced_spec(seed, d.value("large", std::size_t{100}), d.value("small", std::size_t{10}));
    }
    throw UsageError("unknown benchmark: " + name);
}

DatasetSource resolve_dataset(const json& cfg, const RunOptions& opts) {
    if (!cfg.contains("dataset")) throw UsageError("config needs a 'dataset' section");
    const json& d = cfg.at("dataset");
    const std::uint64_t seed = d.value("seed", master_seed(cfg));
    DatasetSource src;
    try {
        if (d.contains("path")) {
            const fs::path p = opts.base_dir / d.at("path").get<std::string>();
            if (!fs::is_regular_file(p)) throw UsageError("dataset path does not exist: " + p.string());
            std::ifstream in(p);
            src.data = load_dataset_csv(in);
        } else if (d.contains("benchmark") && d.at("benchmark") == "separable") {
            src.data = separable_benchmark(seed, d.value("n", std::size_t{100}));
        } else if (d.contains("benchmark")) {
            src.spec = benchmark_spec(d, seed);
        } else if (d.contains("spec")) {
            DatasetSpec s;
            from_json(d.at("spec"), s);
            if (!d.at("spec").contains("seed")) s.seed = seed;
            s.validate();
            src.spec = s;
        } else {
            throw UsageError("dataset needs one of 'path', 'benchmark' or 'spec'");
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config section 'dataset': ") + e.what());
    }
    if (src.spec) src.data = gen_gaussian_mixture(*src.spec);
    if (d.contains("noise")) {
        NoiseSpec ns;
        from_json(d.at("noise"), ns);
        if (ns.kind == NoiseKind::feature) {
            throw UsageError("feature noise needs a reference gradient; use the feature_noise check instead");
        }
        src.data = apply_label_noise(src.data, ns);
    }
    return src;
}

const DatasetSpec& require_spec(const DatasetSource& src, const char* what) {
    if (!src.spec) throw UsageError(std::string(what) + " needs a generated dataset ('benchmark' or 'spec')");
    return *src.spec;
}

std::string dataset_csv(const Dataset& ds) {
    std::ostringstream out;
    save_dataset_csv(ds, out);
    return out.str();
}

std::string profile_csv(const DifficultyProfile& p) {
    std::ostringstream out;
    save_profile_csv(p, out);
    return out.str();
}

json with_schema(json j) {
    j["schema_version"] = schema_version;
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ------------------------------------------------------------------ kinds

ArtifactSet run_gen(const json& cfg, const RunOptions& opts) {
    const auto src = resolve_dataset(cfg, opts);
    ArtifactSet a;
    a.add("dataset.csv", dataset_csv(src.data));
    return a;
}

ErrorEstimatorConfig estimator_for(const json& cfg, std::uint64_t seed, const ModelFamily* family = nullptr) {
    ErrorEstimatorConfig est;
    est.master_seed = seed;
    if (family) est.family = *family;
    if (cfg.contains("estimator")) {
        from_json(cfg.at("estimator"), est);
        if (!cfg.at("estimator").contains("master_seed")) est.master_seed = seed;
    }
    return est;
}

ArtifactSet run_train(const json& cfg, const RunOptions& opts) {
    const auto seed = master_seed(cfg);
    const auto src = resolve_dataset(cfg, opts);
    const auto& ds = src.data;
    const auto family = parse_section<ModelFamily>(cfg, "family");
    ArtifactSet a;
    WeightScheme scheme = family.scheme;
    const bool error_scheme =
        scheme.kind == SchemeKind::error_hard_first || scheme.kind == SchemeKind::error_easy_first;
    if (error_scheme && scheme.difficulty.empty() && !scheme.dynamic && cfg.value("difficulty_from_profile", false)) {
        const auto prof = estimate_error_profile(ds, estimator_for(cfg, seed, &family));
        scheme.difficulty = prof.err;
        a.add("profile.csv", profile_csv(prof));
    }
    std::optional<std::vector<double>> reference;
    json summary = json::object();
    if (cfg.value("max_margin_reference", false)) {
        if (family.kind != ModelKind::linear || !ds.binary()) {
            throw UsageError("max-margin reference needs a linear family on binary data");
        }
        const auto mm = solve_max_margin(ds);
        reference = mm.direction;
        summary["gamma_star"] = mm.gamma_star;
        a.add("max_margin.json", solution_to_json(mm) + "\n");
    }
    const std::size_t width = ds.binary() ? 1 : static_cast<std::size_t>(ds.num_classes);
    const auto init = init_params(family.kind, {ds.d, family.hidden, width}, derive_seed(seed, {1}));
    const auto res = reference ? train(init, ds, scheme, family.loss, family.hyper, std::span<const double>(*reference))
                               : train(init, ds, scheme, family.loss, family.hyper);
    std::ostringstream trace;
    save_trace_csv(res.trace, trace);
    a.add("trace.csv", trace.str());
    a.add("model.json", checkpoint_to_json(res.params) + "\n");

    summary["scheme"] = to_string(scheme.kind);
    summary["family"] = to_string(family.kind);
    summary["loss"] = to_string(family.loss.kind);
    summary["epochs"] = res.trace.records.empty() ? 0 : res.trace.records.back().epoch;
    summary["stopped_early"] = res.trace.stopped_early;
    summary["final_objective"] = res.trace.records.back().objective;
    summary["normalized_margin"] = normalized_margin(res.params, ds);
    summary["train_error"] = test_error(res.params, ds);
    if (reference) {
        summary["final_cosine"] = *res.trace.records.back().cosine_ref;
        const auto e = epochs_to_cosine(res.trace, cfg.value("cosine_threshold", 0.99));
        summary["epochs_to_cosine"] = e ? json(*e) : json(nullptr);
    }
    a.add("train_summary.json", dump(with_schema(summary)));
    return a;
}

ArtifactSet run_difficulty(const json& cfg, const RunOptions& opts) {
    const auto seed = master_seed(cfg);
    const auto src = resolve_dataset(cfg, opts);
    const auto est = estimator_for(cfg, seed);
    const auto prof = estimate_error_profile(src.data, est);
    ArtifactSet a;
    a.add("profile.csv", profile_csv(prof));
    json s{{"loss", to_string(prof.loss)},
           {"decomposition", to_string(prof.decomposition)},
           {"repeats_used", prof.repeats_used},
           {"repeats_discarded", prof.repeats_discarded},
           {"delta_used", prof.delta_used},
           {"mean_err", stats::mean(prof.err)}};
    if (prof.loss == LossKind::exponential) s["median_lognormal_gap"] = stats::median(verify_lognormal_law(prof));
    a.add("profile_summary.json", dump(with_schema(s)));
    return a;
}

ArtifactSet run_bound(const json& cfg, const RunOptions& opts) {
    const auto seed = master_seed(cfg);
    const auto src = resolve_dataset(cfg, opts);
    const auto& spec = require_spec(src, "bound");
    auto sweep_cfg = parse_section<BoundSweepConfig>(cfg, "bound");
    if (!cfg.contains("bound") || !cfg.at("bound").contains("estimator") ||
        !cfg.at("bound").at("estimator").contains("master_seed")) {
        sweep_cfg.estimator.master_seed = seed;
    }
    const auto sweep = bound_weight_sweep(spec, sweep_cfg);
    std::ostringstream csv;
    csv << "level,gamma,L,n,D,I,II,III,total,empirical\n";
    std::string jsonl;
    for (const auto& pt : sweep) {
        const auto& r = pt.report;
        csv << io::format_real(pt.level) << ',' << io::format_real(r.gamma) << ',' << io::format_real(r.L) << ','
            << r.n << ',' << io::format_real(r.D) << ',' << io::format_real(r.I) << ',' << io::format_real(r.II)
            << ',' << io::format_real(r.III) << ',' << io::format_real(r.total) << ','
            << io::format_real(r.empirical) << '\n';
        json j = json::parse(r.to_json());
        j["level"] = pt.level;
        jsonl += with_schema(j).dump() + "\n";
    }
    ArtifactSet a;
    a.add("bound_sweep.csv", csv.str());
    a.add("bound_reports.jsonl", jsonl);
    return a;
}

template <typename T>
T check_config(const json& entry) {
    T c;
    from_json(entry, c);
    return c;
}

template <typename T>
void seed_estimator(T& c, const json& entry, std::uint64_t seed) {
    if (!entry.contains("estimator") || !entry.at("estimator").contains("master_seed")) c.estimator.master_seed = seed;
}

ArtifactSet run_check(const json& cfg, const RunOptions& opts) {
    const auto seed = master_seed(cfg);
    if (!cfg.contains("checks") || !cfg.at("checks").is_object() || cfg.at("checks").empty()) {
        throw UsageError("config needs a non-empty 'checks' object");
    }
    const auto src = resolve_dataset(cfg, opts);
    std::vector<CheckVerdict> verdicts;
    // nlohmann objects iterate in sorted key order, so the verdict order is fixed.
    for (const auto& [id, entry] : cfg.at("checks").items()) {
        log::info("running check " + id);
        if (id == "label_noise") {
            auto c = check_config<LabelNoiseCheckConfig>(entry);
            seed_estimator(c, entry, seed);
            verdicts.push_back(check_label_noise(src.data, c));
        } else if (id == "imbalance") {
            auto c = check_config<ImbalanceCheckConfig>(entry);
            seed_estimator(c, entry, seed);
            verdicts.push_back(check_imbalance(require_spec(src, id.c_str()), c));
        } else if (id == "class_balanced_recall") {
            verdicts.push_back(
                compare_small_class_recall(require_spec(src, id.c_str()), check_config<RecallComparisonConfig>(entry)));
        } else if (id == "margin_error") {
            const auto prof = estimate_error_profile(src.data, estimator_for(entry, seed));
            verdicts.push_back(check_margin_error(prof, parse_section<MarginErrorCheckConfig>(entry, "check")));
        } else if (id == "dual_weights") {
            const auto prof = estimate_error_profile(src.data, estimator_for(entry, seed));
            const auto hi = static_cast<std::size_t>(std::max_element(prof.err.begin(), prof.err.end()) -
                                                     prof.err.begin());
            const auto lo = static_cast<std::size_t>(std::min_element(prof.err.begin(), prof.err.end()) -
                                                     prof.err.begin());
            DualCoefficients coef;
            coef.a = entry.value("a", coef.a);
            coef.b = entry.value("b", coef.b);
            coef.c = entry.value("c", coef.c);
            const auto model = entry.value("model", std::string("linear_p"));
            if (model != "linear_p" && model != "exponential_p") throw UsageError("unknown dual model: " + model);
            verdicts.push_back(check_dual_weights(prof.margin_samples[hi], prof.margin_samples[lo],
                                                  model == "linear_p" ? DualModel::linear_p : DualModel::exponential_p,
                                                  coef));
        } else if (id == "margin_convergence") {
            auto c = check_config<MarginConvergenceConfig>(entry);
            if (!entry.contains("init_seed")) c.init_seed = derive_seed(seed, {99});
            verdicts.push_back(check_margin_convergence(src.data, c));
        } else if (id == "feature_noise") {
            auto c = check_config<FeatureNoiseCheckConfig>(entry);
            seed_estimator(c, entry, seed);
            verdicts.push_back(check_feature_noise(src.data, c));
        } else if (id == "bound_tradeoff") {
            auto c = check_config<BoundSweepConfig>(entry);
            seed_estimator(c, entry, seed);
            verdicts.push_back(check_bound_tradeoff(require_spec(src, id.c_str()), c));
        } else {
            throw UsageError("unknown check: " + id);
        }
    }
    std::ostringstream jsonl, csv;
    write_verdicts_jsonl(verdicts, jsonl);
    write_verdict_summary_csv(verdicts, csv);
    ArtifactSet a;
    a.add("verdicts.jsonl", jsonl.str());
    a.add("verdict_summary.csv", csv.str());
    return a;
}

ArtifactSet run_report(const json& cfg, const RunOptions& opts) {
    std::vector<fs::path> inputs;
    if (cfg.contains("inputs")) {
        for (const auto& p : cfg.at("inputs")) {
            const fs::path dir = opts.base_dir / p.get<std::string>();
            if (!fs::is_directory(dir)) throw UsageError("report input is not a directory: " + dir.string());
            inputs.push_back(dir);
        }
    }
    return build_report(inputs);
}

// ----------------------------------------------------------------- report

struct LoadedRun {
    fs::path dir;
    RunManifest manifest;
};

std::vector<std::vector<std::string>> read_csv_rows(const std::string& text, std::vector<std::string>& header) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    if (!std::getline(in, line)) return rows;
    header = io::split_csv_line(line);
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(io::split_csv_line(line));
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ReportError("artifact lacks column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

double cell(const std::vector<std::string>& row, std::size_t k) {
    return row.at(k).empty() ? std::nan("") : io::parse_real(row.at(k));
}

std::string run_label(const LoadedRun& r) { return r.dir.filename().string(); }

void add_profile_views(const LoadedRun& run, const std::string& text, std::ostringstream& hist,
                       std::ostringstream& classes, std::ostringstream& scatter) {
    std::vector<std::string> h;
    const auto rows = read_csv_rows(text, h);
    const auto c_err = column(h, "err"), c_mu = column(h, "mu_hat"), c_s2 = column(h, "sigma2_hat");
    const auto c_u = column(h, "uncertainty"), c_flag = column(h, "noise_flag"), c_cls = column(h, "class");
    const auto label = run_label(run);
    double top = 0.0;
    for (const auto& r : rows) top = std::max(top, cell(r, c_err));
    constexpr int bins = 20;
    const double width = top > 0.0 ? top / bins : 1.0;
    std::vector<std::array<std::size_t, 2>> counts(bins, {0, 0});
    std::map<int, std::vector<double>> by_class;
    for (const auto& r : rows) {
        const double e = cell(r, c_err);
        const int b = std::min(bins - 1, static_cast<int>(e / width));
        counts[static_cast<std::size_t>(b)][r.at(c_flag) == "1" ? 1 : 0]++;
        by_class[static_cast<int>(io::parse_int(r.at(c_cls)))].push_back(e);
        scatter << label << ',' << r.at(0) << ',' << r.at(c_mu) << ',' << r.at(c_s2) << ',' << r.at(c_err) << ','
                << r.at(c_u) << ',' << r.at(c_flag) << ',' << r.at(c_cls) << '\n';
    }
    for (int b = 0; b < bins; ++b) {
        hist << label << ',' << io::format_real(b * width) << ',' << io::format_real((b + 1) * width) << ','
             << counts[static_cast<std::size_t>(b)][0] << ',' << counts[static_cast<std::size_t>(b)][1] << '\n';
    }
    for (const auto& [cls, errs] : by_class) {
        const double se = errs.size() > 1 ? std::sqrt(stats::variance(errs) / static_cast<double>(errs.size())) : 0.0;
        classes << label << ',' << cls << ',' << errs.size() << ',' << io::format_real(stats::mean(errs)) << ','
                << io::format_real(se) << '\n';
    }
}

}  // namespace

ArtifactSet build_report(const std::vector<fs::path>& inputs) {
    std::vector<LoadedRun> runs;
    for (const auto& dir : inputs) {
        const auto mpath = dir / "manifest.json";
        if (!fs::is_regular_file(mpath)) throw ReportError("no manifest in " + dir.string());
        runs.push_back({dir, RunManifest::from_json(json::parse(io::read_file(mpath)))});
    }
    ArtifactSet a;
    json summary{{"schema_version", schema_version}};
    if (runs.empty()) {
        summary["no_inputs"] = true;
        summary["runs"] = json::array();
        a.add("summary.json", dump(summary));
        return a;
    }
    std::set<int> versions;
    for (const auto& r : runs) versions.insert(r.manifest.schema_version);
    if (versions.size() > 1 || *versions.begin() != schema_version) {
        std::string offenders;
        for (const auto& r : runs) {
            if (r.manifest.schema_version != schema_version) {
                offenders += (offenders.empty() ? "" : ", ") + r.dir.string() + " (schema_version " +
                             std::to_string(r.manifest.schema_version) + ")";
            }
        }
        throw ReportError("inputs mix schema versions; expected " + std::to_string(schema_version) +
                          ", offenders: " + offenders);
    }

    std::ostringstream hist, classes, scatter, schemes, recall;
    hist << "run,bin_lo,bin_hi,count_clean,count_noisy\n";
    classes << "run,class,n,mean_err,se_err\n";
    scatter << "run,idx,mu_hat,sigma2_hat,err,uncertainty,noise_flag,class\n";
    schemes << "run,scheme,family,loss,normalized_margin,final_cosine,epochs_to_cosine\n";
    recall << "run,seed,recall_equal,recall_balanced\n";
    bool have_profile = false, have_train = false, have_recall = false;
    json verdicts = json::object();
    json run_list = json::array();

    for (const auto& run : runs) {
        const auto label = run_label(run);
        run_list.push_back({{"run", label}, {"kind", run.manifest.kind}, {"config_digest", run.manifest.config_digest}});
        for (const auto& art : run.manifest.artifacts) {
            const std::string text = io::read_file(run.dir / art.path);
            if (sha256_hex(text) != art.sha256) throw ReportError("hash mismatch for " + (run.dir / art.path).string());
            if (art.path == "profile.csv") {
                add_profile_views(run, text, hist, classes, scatter);
                have_profile = true;
            } else if (art.path == "trace.csv") {
                std::vector<std::string> h;
                const auto rows = read_csv_rows(text, h);
                std::ostringstream curve;
                curve << "epoch,normalized_margin,cosine_ref\n";
                const auto c_m = column(h, "normalized_margin"), c_c = column(h, "cosine_ref");
                for (const auto& r : rows) curve << r.at(0) << ',' << r.at(c_m) << ',' << r.at(c_c) << '\n';
                a.add("curve_" + label + ".csv", curve.str());
            } else if (art.path == "train_summary.json") {
                const auto s = json::parse(text);
                auto num = [&](const char* k) {
                    return s.contains(k) && !s.at(k).is_null() ? io::format_real(s.at(k).get<double>()) : std::string();
                };
                schemes << label << ',' << s.at("scheme").get<std::string>() << ','
                        << s.at("family").get<std::string>() << ',' << s.at("loss").get<std::string>() << ','
                        << num("normalized_margin") << ',' << num("final_cosine") << ',' << num("epochs_to_cosine")
                        << '\n';
                have_train = true;
            } else if (art.path == "verdicts.jsonl") {
                std::istringstream in(text);
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty()) continue;
                    const auto v = json::parse(line);
                    if (v.value("schema_version", 0) != schema_version) {
                        throw ReportError("verdict with foreign schema_version in " + run.dir.string());
                    }
                    const auto id = v.at("check_id").get<std::string>();
                    verdicts[id] = {{"run", label},
                                    {"outcome", v.at("outcome")},
                                    {"headline", v.at("headline")},
                                    {"statistics", v.at("statistics")}};
                    if (id == "class_balanced_recall") {
                        const auto& st = v.at("statistics");
                        for (const auto& [k, val] : st.items()) {
                            const std::string prefix = "recall_equal_seed";
                            if (k.rfind(prefix, 0) != 0) continue;
                            const auto seed = k.substr(prefix.size());
                            auto fmt = [](const json& x) {
                                return x.is_null() ? std::string() : io::format_real(x.get<double>());
                            };
                            recall << label << ',' << seed << ',' << fmt(val) << ','
                                   << fmt(st.at("recall_balanced_seed" + seed)) << '\n';
                        }
                        have_recall = true;
                    }
                }
            }
        }
    }
    if (have_profile) {
        a.add("error_histogram_by_noise.csv", hist.str());
        a.add("class_error_bars.csv", classes.str());
        a.add("margin_uncertainty_error_scatter.csv", scatter.str());
    }
    if (have_train) a.add("normalized_margin_by_scheme.csv", schemes.str());
    if (have_recall) a.add("small_class_recall.csv", recall.str());
    summary["no_inputs"] = false;
    summary["runs"] = run_list;
    summary["verdicts"] = verdicts;
    a.add("summary.json", dump(summary));
    return a;
}

ArtifactSet compute(Kind kind, const json& config_in, const RunOptions& opts) {
    if (!config_in.is_object()) throw UsageError("config must be a JSON object");
    if (config_in.contains("experiment") && config_in.at("experiment") != to_string(kind)) {
        throw UsageError("config is for experiment '" + config_in.at("experiment").get<std::string>() + "', not '" +
                         to_string(kind) + "'");
    }
    json config = config_in;
    if (opts.jobs > 0) apply_jobs(config, opts.jobs);
    try {
        switch (kind) {
            case Kind::gen: return run_gen(config, opts);
            case Kind::train: return run_train(config, opts);
            case Kind::difficulty: return run_difficulty(config, opts);
            case Kind::bound: return run_bound(config, opts);
            case Kind::check: return run_check(config, opts);
            case Kind::report: return run_report(config, opts);
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
    throw UsageError("unhandled experiment kind");
}

RunManifest run(Kind kind, const json& config, const RunOptions& opts) {
    RunManifest m;
    m.kind = to_string(kind);
    m.started_at = utc_now();
    m.config_digest = config_digest(config);
    m.seed = kind == Kind::report ? config.value("seed", std::uint64_t{0}) : master_seed(config);
    const auto artifacts = compute(kind, config, opts);
    fs::create_directories(opts.out_dir);
    for (const auto& [name, content] : artifacts.files) {
        io::write_file_atomic(opts.out_dir / name, content);
        m.artifacts.push_back({name, sha256_hex(content), content.size()});
    }
    m.finished_at = utc_now();
    io::write_file_atomic(opts.out_dir / "manifest.json", dump(m.to_json()));
    return m;
}

namespace {

json error_record(const std::string& type, const std::string& message, int status) {
    return json{{"error", type}, {"message", message}, {"exit_status", status}, {"schema_version", schema_version}};
}

int fail(const json& rec, const std::optional<fs::path>& out_dir) {
    std::cerr << rec.dump() << '\n';
    if (out_dir) {
        try {
            fs::create_directories(*out_dir);
            io::write_file_atomic(*out_dir / "error.json", dump(rec));
        } catch (const std::exception&) {
        }
    }
    return rec.at("exit_status").get<int>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Difficulty-weighting lab"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir;
    std::size_t jobs = 0;
    for (auto k : {Kind::gen, Kind::train, Kind::difficulty, Kind::bound, Kind::check, Kind::report}) {
        auto* sub = app.add_subcommand(to_string(k), std::string("run the ") + to_string(k) + " experiment");
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--jobs", jobs, "worker cap (results do not depend on it)")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_dir, "output directory (default: out)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(error_record("usage", e.what(), 2), std::nullopt);
    }
    const Kind kind = kind_from_string(app.get_subcommands().front()->get_name());

    RunOptions opts;
    opts.jobs = jobs;
    opts.out_dir = out_dir.empty() ? fs::path("out") : fs::path(out_dir);
    json config;
    try {
        if (!fs::is_regular_file(config_path)) throw UsageError("config file not found: " + config_path);
        config = json::parse(io::read_file(config_path));
        opts.base_dir = fs::absolute(config_path).parent_path();
    } catch (const json::exception& e) {
        return fail(error_record("usage", std::string("config is not valid JSON: ") + e.what(), 2), std::nullopt);
    } catch (const UsageError& e) {
        return fail(error_record("usage", e.what(), 2), std::nullopt);
    }

    try {
        const auto m = run(kind, config, opts);
        log::info("wrote " + std::to_string(m.artifacts.size()) + " artifacts to " + opts.out_dir.string());
        return 0;
    } catch (const UsageError& e) {
        return fail(error_record("usage", e.what(), 2), std::nullopt);
    } catch (const SpecificationError& e) {
        return fail(error_record("invalid_config", e.what(), 2), std::nullopt);
    } catch (const ReportError& e) {
        return fail(error_record("report", e.what(), 1), opts.out_dir);
    } catch (const std::exception& e) {
        return fail(error_record("runtime", e.what(), 1), opts.out_dir);
    }
}

}  // namespace dwlab::lab
