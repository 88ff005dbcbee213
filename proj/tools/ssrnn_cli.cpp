// Command-line front end: dataset generation, training, evaluation, and
// gradient checking.
//
// Exit codes: 0 success, 1 usage error, 2 runtime/data error, 3 check failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssrnn/ssrnn.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCheckFailure = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ssrnn::TaskKind parse_task(const std::string& name) {
    if (name == "copy") return ssrnn::TaskKind::Copy;
    if (name == "reverse") return ssrnn::TaskKind::Reverse;
    if (name == "delayed-echo") return ssrnn::TaskKind::DelayedEcho;
    throw UsageError("unknown task '" + name + "' (expected copy, reverse or delayed-echo)");
}

std::vector<int> parse_lengths(const std::string& csv) {
    std::vector<int> lengths;
    std::string item;
    std::istringstream in(csv);
    while (std::getline(in, item, ',')) {
        try {
            std::size_t pos = 0;
            const int v = std::stoi(item, &pos);
            if (pos != item.size() || v < 1) throw std::invalid_argument(item);
            lengths.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("bad --curve entry '" + item + "'");
        }
    }
    if (lengths.empty()) throw UsageError("--curve needs at least one length");
    return lengths;
}

std::optional<double> parse_clip(const std::string& text) {
    if (text == "none" || text == "off") return std::nullopt;
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size() || !(v > 0.0)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError("bad --clip value '" + text + "' (positive number or 'none')");
    }
}

int infer_vocab(const ssrnn::Dataset& data) {
    int max_tok = 1;
    for (const auto& ex : data) {
        for (int t : ex.x) max_tok = std::max(max_tok, t);
        for (int t : ex.y) max_tok = std::max(max_tok, t);
    }
    return max_tok + 1;
}

void check_tokens_in_vocab(const ssrnn::Dataset& data, int vocab) {
    for (const auto& ex : data) {
        for (int t : ex.x) {
            if (t >= vocab) throw ssrnn::Error("dataset token " + std::to_string(t) +
                                               " exceeds vocab " + std::to_string(vocab));
        }
        for (int t : ex.y) {
            if (t >= vocab) throw ssrnn::Error("dataset token " + std::to_string(t) +
                                               " exceeds vocab " + std::to_string(vocab));
        }
    }
}

// ---- gen ----

struct GenArgs {
    std::string task;
    int len = 0;
    int delay = 0;
    int vocab = 0;
    int n = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen(const GenArgs& args) {
    ssrnn::TaskSpec spec;
    spec.kind = parse_task(args.task);
    spec.length = args.len;
    spec.delay = args.delay;
    spec.vocab = args.vocab;
    spec.num_examples = args.n;
    spec.seed = args.seed;
    try {
        ssrnn::validate_spec(spec);
    } catch (const ssrnn::Error& e) {
        throw UsageError(e.what());
    }
    const ssrnn::Dataset data = ssrnn::generate_dataset(spec);
    ssrnn::save_dataset(data, args.out);
    std::cout << data.size() << " examples written to " << args.out << "\n";
    return 0;
}

// ---- train ----

struct TrainArgs {
    std::string data;
    std::string regime;
    int epochs = 0;
    double lr = 0.5;
    int batch = 16;
    double alpha = 1.0;
    double alpha_end = -1.0;
    double p = -1.0;
    double alpha_min = 0.02;
    std::string clip = "5.0";
    int hidden = 32;
    std::string encoder = "static";
    int vocab = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string metrics;
};

int run_train(const TrainArgs& args) {
    if (args.p >= 0.0 && args.alpha_end >= 0.0) {
        throw UsageError("--p and --alpha-end are mutually exclusive");
    }

    ssrnn::TrainConfig tc;
    if (args.regime == "teacher") {
        tc.regime = ssrnn::Regime::TeacherForcing;
    } else if (args.regime == "dagger") {
        tc.regime = ssrnn::Regime::Dagger;
    } else {
        throw UsageError("unknown regime '" + args.regime + "' (expected teacher or dagger)");
    }
    tc.epochs = args.epochs;
    tc.batch_size = args.batch;
    tc.learning_rate = args.lr;
    tc.clip_norm = parse_clip(args.clip);
    tc.seed = args.seed;
    tc.schedule.alpha = args.alpha;
    tc.schedule.alpha_min = std::min(args.alpha_min, args.alpha);
    if (args.p >= 0.0) {
        tc.schedule.p = args.p;
    } else if (args.alpha_end >= 0.0) {
        try {
            tc.schedule.p = ssrnn::solve_decay_factor(args.alpha, args.alpha_end, args.epochs);
        } catch (const ssrnn::Error& e) {
            throw UsageError(e.what());
        }
    } else {
        tc.schedule.p = 1.0;
    }

    const ssrnn::Dataset data = ssrnn::load_dataset(args.data);
    if (data.empty()) throw ssrnn::Error("dataset " + args.data + " is empty");
    const int vocab = args.vocab > 0 ? args.vocab : infer_vocab(data);
    check_tokens_in_vocab(data, vocab);

    ssrnn::ModelConfig mc;
    mc.hidden_dim = args.hidden;
    mc.input_vocab = vocab;
    mc.output_vocab = vocab;
    if (args.encoder == "static") {
        mc.encoder_mode = ssrnn::EncoderMode::StaticStart;
        mc.feed_input_tokens = true;
    } else if (args.encoder == "rnn") {
        mc.encoder_mode = ssrnn::EncoderMode::EncodingRnn;
        mc.feed_input_tokens = false;
    } else {
        throw UsageError("unknown encoder '" + args.encoder + "' (expected static or rnn)");
    }

    std::ofstream metrics_file;
    if (!args.metrics.empty()) {
        metrics_file.open(args.metrics, std::ios::binary);
        if (!metrics_file) throw ssrnn::Error("cannot open metrics file " + args.metrics);
    }
    auto emit = [&](const ssrnn::EpochMetrics& m) {
        const std::string line = ssrnn::metrics_line(m);
        if (metrics_file.is_open()) {
            metrics_file << line << '\n';
        } else {
            std::cout << line << "\n";
        }
        std::fprintf(stderr, "epoch %d alpha=%.4f loss=%.6f tf_acc=%.4f fr_acc=%.4f (%.2fs)\n",
                     m.epoch, m.alpha, m.mean_loss, m.teacher_forced_accuracy,
                     m.free_running_accuracy, m.wall_time_s);
    };

    auto [params, metrics] = ssrnn::train(data, tc, mc, emit);
    (void)metrics;

    ssrnn::Checkpoint ckpt;
    ckpt.model_config = mc;
    ckpt.train_config = tc;
    ckpt.params = std::move(params);
    ckpt.rng_seed = tc.seed;
    ckpt.epoch_reached = tc.epochs;
    ssrnn::save_checkpoint(ckpt, args.out);
    std::fprintf(stderr, "checkpoint written to %s\n", args.out.c_str());
    return 0;
}

// ---- eval ----

struct EvalArgs {
    std::string ckpt;
    std::string data;
    std::string curve;
    std::string task = "delayed-echo";
    int delay = 0;
    int vocab = 0;
    int n = 128;
    std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& args) {
    if (args.data.empty() && args.curve.empty()) {
        throw UsageError("eval needs a dataset file and/or --curve");
    }
    const ssrnn::Checkpoint ckpt = ssrnn::load_checkpoint(args.ckpt);

    if (!args.data.empty()) {
        const ssrnn::Dataset data = ssrnn::load_dataset(args.data);
        if (data.empty()) throw ssrnn::Error("dataset " + args.data + " is empty");
        check_tokens_in_vocab(data, ckpt.model_config.output_vocab);
        for (const ssrnn::EvalMode mode :
             {ssrnn::EvalMode::TeacherForced, ssrnn::EvalMode::FreeRunning}) {
            const ssrnn::ErrorReport report =
                ssrnn::evaluate(data, ckpt.params, ckpt.model_config, mode);
            std::cout << ssrnn::error_report_line(mode, report) << "\n";
        }
    }

    if (!args.curve.empty()) {
        const std::vector<int> lengths = parse_lengths(args.curve);
        ssrnn::TaskSpec spec;
        spec.kind = parse_task(args.task);
        spec.delay = args.delay;
        spec.vocab = args.vocab > 0 ? args.vocab : ckpt.model_config.output_vocab;
        spec.num_examples = args.n;
        spec.seed = args.seed;
        spec.length = lengths.front();
        const ssrnn::CompoundingCurve curve =
            ssrnn::compounding_curve(ckpt.params, ckpt.model_config, spec, lengths);
        std::cout << ssrnn::curve_line(curve) << "\n";
    }
    return 0;
}

// ---- gradcheck ----

struct GradcheckArgs {
    std::int64_t seed = -1;
    double tolerance = 1e-4;
};

ssrnn::ModelConfig gradcheck_config(std::uint64_t seed) {
    ssrnn::Rng rng(ssrnn::derive_seed(seed, 0x636667ULL));
    ssrnn::ModelConfig config;
    config.hidden_dim = 2 + static_cast<int>(rng.bounded(7));   // 2..8
    config.output_vocab = 3 + static_cast<int>(rng.bounded(4)); // 3..6
    config.input_vocab = 3 + static_cast<int>(rng.bounded(4));  // 3..6
    switch (seed % 4) {
        case 0:
            config.encoder_mode = ssrnn::EncoderMode::StaticStart;
            config.feed_input_tokens = true;
            break;
        case 1:
            config.encoder_mode = ssrnn::EncoderMode::StaticStart;
            config.feed_input_tokens = false;
            break;
        case 2:
            config.encoder_mode = ssrnn::EncoderMode::EncodingRnn;
            config.feed_input_tokens = false;
            break;
        default:
            config.encoder_mode = ssrnn::EncoderMode::EncodingRnn;
            config.feed_input_tokens = true;
            break;
    }
    return config;
}

int run_gradcheck(const GradcheckArgs& args) {
    if (!(args.tolerance > 0.0)) throw UsageError("--tolerance must be positive");
    std::vector<std::uint64_t> seeds;
    if (args.seed >= 0) {
        seeds.push_back(static_cast<std::uint64_t>(args.seed));
    } else {
        seeds = {1, 2, 3, 4, 5};
    }
    bool all_pass = true;
    for (const std::uint64_t seed : seeds) {
        const ssrnn::ModelConfig config = gradcheck_config(seed);
        const ssrnn::GradCheckReport report = ssrnn::grad_check(config, seed, args.tolerance);
        std::printf("seed %llu H=%d Vy=%d Vx=%d %s feed=%d T=%d max_rel=%.3e %s\n",
                    static_cast<unsigned long long>(seed), config.hidden_dim, config.output_vocab,
                    config.input_vocab, ssrnn::encoder_mode_name(config.encoder_mode),
                    config.feed_input_tokens ? 1 : 0, report.seq_len, report.max_rel_error,
                    report.pass ? "PASS" : "FAIL");
        for (const auto& block : report.blocks) {
            std::printf("  %-8s max_rel=%.3e\n", block.name.c_str(), block.max_rel_error);
        }
        all_pass = all_pass && report.pass;
    }
    return all_pass ? 0 : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent sequence-prediction lab: teacher forcing vs scheduled-sampling DAgger"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic transduction dataset");
    gen_cmd->add_option("--task", gen.task, "copy | reverse | delayed-echo")->required();
    gen_cmd->add_option("--len", gen.len, "sequence length")->required();
    gen_cmd->add_option("--delay", gen.delay, "echo delay (delayed-echo only)");
    gen_cmd->add_option("--vocab", gen.vocab, "vocabulary size (>= 3)")->required();
    gen_cmd->add_option("--n", gen.n, "number of examples")->required();
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--out", gen.out, "output dataset file")->required();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset file");
    train_cmd->add_option("data", train.data, "dataset file")->required();
    train_cmd->add_option("--regime", train.regime, "teacher | dagger")->required();
    train_cmd->add_option("--epochs", train.epochs, "number of epochs")->required();
    train_cmd->add_option("--lr", train.lr, "learning rate")->capture_default_str();
    train_cmd->add_option("--batch", train.batch, "mini-batch size")->capture_default_str();
    train_cmd->add_option("--alpha", train.alpha, "initial true-label probability")->capture_default_str();
    train_cmd->add_option("--alpha-end", train.alpha_end, "derive p so alpha reaches this at the last epoch");
    train_cmd->add_option("--p", train.p, "explicit per-epoch decay factor");
    train_cmd->add_option("--alpha-min", train.alpha_min, "alpha floor")->capture_default_str();
    train_cmd->add_option("--clip", train.clip, "gradient clip norm, or 'none'")->capture_default_str();
    train_cmd->add_option("--hidden", train.hidden, "hidden dimension")->capture_default_str();
    train_cmd->add_option("--encoder", train.encoder, "static | rnn")->capture_default_str();
    train_cmd->add_option("--vocab", train.vocab, "vocabulary size (default: inferred)");
    train_cmd->add_option("--seed", train.seed, "training seed")->capture_default_str();
    train_cmd->add_option("--out", train.out, "checkpoint output file")->required();
    train_cmd->add_option("--metrics", train.metrics, "metrics JSON-lines file (default: stdout)");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("ckpt", eval.ckpt, "checkpoint file")->required();
    eval_cmd->add_option("data", eval.data, "dataset file");
    eval_cmd->add_option("--curve", eval.curve, "comma-separated lengths for the error-vs-length curve");
    eval_cmd->add_option("--task", eval.task, "curve task kind")->capture_default_str();
    eval_cmd->add_option("--delay", eval.delay, "curve task delay");
    eval_cmd->add_option("--vocab", eval.vocab, "curve task vocab (default: checkpoint vocab)");
    eval_cmd->add_option("--n", eval.n, "curve eval-set size")->capture_default_str();
    eval_cmd->add_option("--seed", eval.seed, "curve eval-set seed")->capture_default_str();

    GradcheckArgs gradcheck;
    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "Check backpropagation against finite differences");
    gradcheck_cmd->add_option("--seed", gradcheck.seed, "single seed (default: the 5 standard seeds)");
    gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance, "max relative error")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return run_gen(gen);
        if (train_cmd->parsed()) return run_train(train);
        if (eval_cmd->parsed()) return run_eval(eval);
        if (gradcheck_cmd->parsed()) return run_gradcheck(gradcheck);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ssrnn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
