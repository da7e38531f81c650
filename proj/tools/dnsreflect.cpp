// dnsreflect: batch pipeline for spotting DNS servers abused as DoS
// reflectors. Subcommands cover synthetic trace generation, response
// labeling, feature-matrix construction, SVM training and classification.

#include <cxxabi.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnsrefl/eval.hpp"
#include "dnsrefl/matcher.hpp"
#include "dnsrefl/matrix.hpp"
#include "dnsrefl/pcap.hpp"
#include "dnsrefl/render.hpp"
#include "dnsrefl/rng.hpp"
#include "dnsrefl/svm.hpp"
#include "dnsrefl/synth.hpp"

namespace {

using namespace dnsrefl;

std::string type_name(const std::exception& e) {
    int status = 0;
    char* demangled = abi::__cxa_demangle(typeid(e).name(), nullptr, nullptr, &status);
    std::string out = (status == 0 && demangled) ? demangled : typeid(e).name();
    std::free(demangled);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out)
        throw IoError("write failed: " + path);
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed: " + path);
}

void emit_report(const ClassReport& rep, const std::string& path) {
    const std::string text = render_report(rep);
    std::cout << text;
    write_text(path, text);
    write_text(path + ".json", report_json(rep));
    std::cout << "report written to " << path << " (+ .json)\n";
}

struct TrainArgs {
    std::string matrices, model_out, report_out;
    double c = 10.0, gamma = 0.01, bad_frac = 0.8, train_frac = 0.8;
    uint64_t n_good = 20000, seed = 1;
    bool unstratified = false;
};

int run_train(const TrainArgs& a) {
    std::printf("config: train matrices=%s c=%g gamma=%g n-good=%llu bad-frac=%g train-frac=%g "
                "stratified=%s seed=%llu model-out=%s report-out=%s\n",
                a.matrices.c_str(), a.c, a.gamma, static_cast<unsigned long long>(a.n_good),
                a.bad_frac, a.train_frac, a.unstratified ? "no" : "yes",
                static_cast<unsigned long long>(a.seed), a.model_out.c_str(), a.report_out.c_str());

    auto all = read_matrices(a.matrices);
    std::vector<FeatureMatrix> good, bad;
    for (auto& m : all)
        (m.label == Label::good ? good : bad).push_back(std::move(m));
    if (good.empty() || bad.empty())
        throw SingleClass("matrix file contains a single class; need both good and bad");

    Rng master(a.seed);
    const uint64_t regime_seed = master.next_u64();
    const uint64_t split_seed = master.next_u64();
    const uint64_t smo_seed = master.next_u64();

    auto regime = sample_regime(std::move(good), std::move(bad), a.n_good, a.bad_frac, regime_seed);
    if (regime.good_short)
        std::cerr << "warning: only " << regime.pool_good << " good matrices available, requested "
                  << static_cast<unsigned long long>(a.n_good) << "; took all\n";
    std::printf("pool: %zu good + %zu bad, holdout %zu\n", regime.pool_good, regime.pool_bad,
                regime.holdout.size());

    auto parts = split(std::move(regime.pool), a.train_frac, split_seed, !a.unstratified);
    std::printf("split: train %zu, test %zu\n", parts.train.size(), parts.test.size());

    SmoConfig cfg;
    cfg.c = a.c;
    cfg.gamma = a.gamma;
    cfg.seed = smo_seed;
    TrainInfo info;
    const SvmModel model = smo_train(make_training_set(parts.train), cfg, &info);
    std::printf("trained: %zu support vectors, %llu sweeps, %llu updates%s\n",
                model.support_vectors.size(), static_cast<unsigned long long>(info.sweeps),
                static_cast<unsigned long long>(info.updates),
                model.cap_hit ? " (iteration cap hit)" : "");

    std::vector<Label> truth, pred;
    for (const auto& m : parts.test) {
        truth.push_back(m.label);
        pred.push_back(predict(model, flatten(m)));
    }
    emit_report(classification_report(truth, pred), a.report_out);
    save_model(model, a.model_out);
    std::cout << "model written to " << a.model_out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DNS reflector detection pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic capture");
    std::string synth_config, synth_out;
    synth_cmd->add_option("--config", synth_config, "scenario config file")->required();
    synth_cmd->add_option("--out", synth_out, "output pcap path")->required();

    // label
    auto* label_cmd = app.add_subcommand("label", "match responses to requests and label them");
    std::string label_pcap, label_out;
    double label_timeout = 30.0;
    bool label_multi = false;
    label_cmd->add_option("--pcap", label_pcap, "input pcap")->required();
    label_cmd->add_option("--timeout", label_timeout, "request match window, seconds");
    label_cmd->add_flag("--multi-match", label_multi, "let one request validate several responses");
    label_cmd->add_option("--out", label_out, "output response table")->required();

    // matrix
    auto* matrix_cmd = app.add_subcommand("matrix", "build per-server feature matrices");
    std::string matrix_in, matrix_out;
    matrix_cmd->add_option("--in", matrix_in, "response table from `label`")->required();
    matrix_cmd->add_option("--out", matrix_out, "output matrix file")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "sample, split and train the SVM");
    TrainArgs train_args;
    train_cmd->add_option("--matrices", train_args.matrices, "matrix file")->required();
    train_cmd->add_option("--c", train_args.c, "soft-margin penalty");
    train_cmd->add_option("--gamma", train_args.gamma, "RBF kernel width");
    train_cmd->add_option("--n-good", train_args.n_good, "good matrices sampled into the pool");
    train_cmd->add_option("--bad-frac", train_args.bad_frac, "fraction of bad matrices sampled");
    train_cmd->add_option("--train-frac", train_args.train_frac, "train share of the pool");
    train_cmd->add_flag("--unstratified", train_args.unstratified, "split the pool without stratification");
    train_cmd->add_option("--seed", train_args.seed, "random seed");
    train_cmd->add_option("--model-out", train_args.model_out, "model file")->required();
    train_cmd->add_option("--report-out", train_args.report_out, "test report file")->required();

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "cross-validated hyper-parameter search");
    std::string grid_matrices;
    std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_grid{0.001, 0.01, 0.1};
    int grid_folds = 3;
    uint64_t grid_seed = 1;
    grid_cmd->add_option("--matrices", grid_matrices, "matrix file")->required();
    grid_cmd->add_option("--c-grid", c_grid, "penalty candidates")->delimiter(',');
    grid_cmd->add_option("--gamma-grid", gamma_grid, "gamma candidates")->delimiter(',');
    grid_cmd->add_option("--folds", grid_folds, "cross-validation folds");
    grid_cmd->add_option("--seed", grid_seed, "random seed");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "apply a trained model to matrices");
    std::string classify_model, classify_matrices, classify_report;
    classify_cmd->add_option("--model", classify_model, "model file")->required();
    classify_cmd->add_option("--matrices", classify_matrices, "matrix file")->required();
    classify_cmd->add_option("--report-out", classify_report, "report file")->required();

    // render
    auto* render_cmd = app.add_subcommand("render", "render one matrix as a PGM image");
    std::string render_matrices, render_out;
    size_t render_index = 0;
    int render_scale = 4;
    render_cmd->add_option("--matrices", render_matrices, "matrix file")->required();
    render_cmd->add_option("--index", render_index, "matrix index in the file");
    render_cmd->add_option("--scale", render_scale, "pixels per cell");
    render_cmd->add_option("--out", render_out, "output PGM path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help / --version
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*synth_cmd) {
            const ScenarioConfig cfg = parse_scenario_file(synth_config);
            std::cout << "config: synth out=" << synth_out << "\n" << scenario_to_text(cfg);
            const SummaryCounts sum = generate(cfg, synth_out);
            std::printf("wrote %llu frames (%llu queries, %llu responses, %zu servers) to %s\n",
                        static_cast<unsigned long long>(sum.frames),
                        static_cast<unsigned long long>(sum.queries),
                        static_cast<unsigned long long>(sum.responses), sum.per_server.size(),
                        synth_out.c_str());
        } else if (*label_cmd) {
            std::printf("config: label pcap=%s timeout=%g multi-match=%s out=%s\n",
                        label_pcap.c_str(), label_timeout, label_multi ? "yes" : "no",
                        label_out.c_str());
            IngestStats stats;
            const auto records = read_pcap(label_pcap, &stats);
            uint64_t malformed = 0;
            const auto decoded = decode_all(records, &malformed);
            MatcherOptions opts;
            opts.timeout_s = label_timeout;
            opts.multi_match = label_multi;
            const auto responses = match_stream(decoded, opts);
            uint64_t bad = 0;
            for (const auto& r : responses)
                if (r.label == Label::bad)
                    ++bad;
            write_responses(responses, label_out);
            std::printf("frames=%llu udp53=%llu skipped=%llu malformed=%llu responses=%zu "
                        "(good=%zu bad=%llu)\n",
                        static_cast<unsigned long long>(stats.frames),
                        static_cast<unsigned long long>(stats.yielded),
                        static_cast<unsigned long long>(stats.skipped),
                        static_cast<unsigned long long>(malformed), responses.size(),
                        responses.size() - bad, static_cast<unsigned long long>(bad));
        } else if (*matrix_cmd) {
            std::printf("config: matrix in=%s out=%s\n", matrix_in.c_str(), matrix_out.c_str());
            const auto responses = read_responses(matrix_in);
            auto built = build_matrices(responses);
            write_matrices(built.matrices, matrix_out);
            size_t bad = 0;
            for (const auto& m : built.matrices)
                if (m.label == Label::bad)
                    ++bad;
            std::printf("matrices=%zu (good=%zu bad=%zu), %llu responses discarded in remainders\n",
                        built.matrices.size(), built.matrices.size() - bad, bad,
                        static_cast<unsigned long long>(built.discarded));
        } else if (*train_cmd) {
            return run_train(train_args);
        } else if (*grid_cmd) {
            std::printf("config: grid matrices=%s folds=%d seed=%llu\n", grid_matrices.c_str(),
                        grid_folds, static_cast<unsigned long long>(grid_seed));
            const auto data = make_training_set(read_matrices(grid_matrices));
            const GridResult res = grid_search(data, c_grid, gamma_grid, grid_folds, grid_seed);
            for (const auto& pt : res.points) {
                std::printf("c=%-8g gamma=%-8g macro-f1=%.4f (folds:", pt.c, pt.gamma, pt.mean_score);
                for (double s : pt.fold_scores)
                    std::printf(" %.4f", s);
                std::printf(")\n");
            }
            std::printf("best: c=%g gamma=%g\n", res.best_c, res.best_gamma);
        } else if (*classify_cmd) {
            std::printf("config: classify model=%s matrices=%s report-out=%s\n",
                        classify_model.c_str(), classify_matrices.c_str(), classify_report.c_str());
            const SvmModel model = load_model(classify_model);
            const auto matrices = read_matrices(classify_matrices);
            if (matrices.empty())
                throw SchemaError("matrix file is empty");
            std::vector<Label> truth, pred;
            for (const auto& m : matrices) {
                truth.push_back(m.label);
                pred.push_back(predict(model, flatten(m)));
            }
            emit_report(classification_report(truth, pred), classify_report);
        } else if (*render_cmd) {
            std::printf("config: render matrices=%s index=%zu scale=%d out=%s\n",
                        render_matrices.c_str(), render_index, render_scale, render_out.c_str());
            const auto matrices = read_matrices(render_matrices);
            if (render_index >= matrices.size())
                throw Error("matrix index " + std::to_string(render_index) + " out of range (file has " +
                            std::to_string(matrices.size()) + ")");
            write_bytes(render_out, render_pgm(matrices[render_index], render_scale));
            std::printf("wrote %s\n", render_out.c_str());
        }
    } catch (const Error& e) {
        std::cerr << "error: " << type_name(e) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << type_name(e) << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}
