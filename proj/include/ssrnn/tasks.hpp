#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ssrnn/numeric.hpp"
#include "ssrnn/rng.hpp"

namespace ssrnn {

/// One training example: aligned input and output token sequences.
/// Output tokens are always content tokens in [1, vocab); index 0 is
/// reserved for the BOS pseudo-action and never appears as a target.
struct SequencePair {
    std::vector<int> x;
    std::vector<int> y;

    bool operator==(const SequencePair& o) const { return x == o.x && y == o.y; }
    bool operator<(const SequencePair& o) const { return std::tie(x, y) < std::tie(o.x, o.y); }
};

using Dataset = std::vector<SequencePair>;

enum class TaskKind { Copy, Reverse, DelayedEcho };

inline const char* task_name(TaskKind k) {
    switch (k) {
        case TaskKind::Copy: return "copy";
        case TaskKind::Reverse: return "reverse";
        case TaskKind::DelayedEcho: return "delayed-echo";
    }
    return "?";
}

struct TaskSpec {
    TaskKind kind = TaskKind::Copy;
    int length = 1;
    int delay = 0;  // DelayedEcho only
    int vocab = 3;
    int num_examples = 1;
    std::uint64_t seed = 0;
};

// Pad token emitted by DelayedEcho before the echo starts.
inline constexpr int kPadToken = 1;

inline void validate_spec(const TaskSpec& spec) {
    if (spec.length < 1) throw Error("task spec: length must be >= 1, got " + std::to_string(spec.length));
    if (spec.vocab < 3) throw Error("task spec: vocab must be >= 3, got " + std::to_string(spec.vocab));
    if (spec.num_examples < 1) {
        throw Error("task spec: num_examples must be >= 1, got " + std::to_string(spec.num_examples));
    }
    if (spec.kind == TaskKind::DelayedEcho && (spec.delay < 1 || spec.delay >= spec.length)) {
        throw Error("task spec: delayed-echo requires 1 <= delay < length, got delay " +
                    std::to_string(spec.delay) + " with length " + std::to_string(spec.length));
    }
}

/// Deterministic synthetic transducer dataset. Inputs are uniform over the
/// content tokens [1, vocab).
inline Dataset generate_dataset(const TaskSpec& spec) {
    validate_spec(spec);
    Rng rng(spec.seed);
    Dataset data;
    data.reserve(static_cast<std::size_t>(spec.num_examples));
    for (int n = 0; n < spec.num_examples; ++n) {
        SequencePair pair;
        pair.x.resize(static_cast<std::size_t>(spec.length));
        for (int& tok : pair.x) {
            tok = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.vocab - 1)));
        }
        switch (spec.kind) {
            case TaskKind::Copy:
                pair.y = pair.x;
                break;
            case TaskKind::Reverse:
                pair.y.assign(pair.x.rbegin(), pair.x.rend());
                break;
            case TaskKind::DelayedEcho:
                pair.y.resize(pair.x.size());
                for (std::size_t t = 0; t < pair.x.size(); ++t) {
                    pair.y[t] = t >= static_cast<std::size_t>(spec.delay)
                                    ? pair.x[t - static_cast<std::size_t>(spec.delay)]
                                    : kPadToken;
                }
                break;
        }
        data.push_back(std::move(pair));
    }
    return data;
}

/// Deterministic shuffled split; the two parts are disjoint and exhaustive.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_fraction,
                                                 std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("split_dataset: train_fraction must lie in (0, 1), got " +
                    std::to_string(train_fraction));
    }
    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(static_cast<double>(data.size()) * train_fraction);
    Dataset train, eval;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        (i < n_train ? train : eval).push_back(data[idx[i]]);
    }
    return {train, eval};
}

// ---- line-oriented text format: "x tokens<TAB>y tokens", space-separated ----

inline std::string format_example(const SequencePair& pair) {
    std::string line;
    for (std::size_t i = 0; i < pair.x.size(); ++i) {
        if (i) line += ' ';
        line += std::to_string(pair.x[i]);
    }
    line += '\t';
    for (std::size_t i = 0; i < pair.y.size(); ++i) {
        if (i) line += ' ';
        line += std::to_string(pair.y[i]);
    }
    return line;
}

inline void save_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_dataset: cannot open " + path + " for writing");
    for (const auto& pair : data) out << format_example(pair) << '\n';
}

inline std::vector<int> parse_token_field(const std::string& field, const std::string& path,
                                          std::size_t line_no) {
    std::vector<int> tokens;
    std::istringstream in(field);
    std::string word;
    while (in >> word) {
        std::size_t pos = 0;
        int value = 0;
        try {
            value = std::stoi(word, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != word.size() || value < 0) {
            throw Error("load_dataset: " + path + ":" + std::to_string(line_no) +
                        ": bad token '" + word + "'");
        }
        tokens.push_back(value);
    }
    return tokens;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_dataset: cannot open " + path);
    Dataset data;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error("load_dataset: " + path + ":" + std::to_string(line_no) + ": missing tab separator");
        }
        SequencePair pair;
        pair.x = parse_token_field(line.substr(0, tab), path, line_no);
        pair.y = parse_token_field(line.substr(tab + 1), path, line_no);
        for (int tok : pair.y) {
            if (tok == 0) {
                throw Error("load_dataset: " + path + ":" + std::to_string(line_no) +
                            ": target token 0 is reserved for BOS");
            }
        }
        data.push_back(std::move(pair));
    }
    return data;
}

}  // namespace ssrnn
