#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rtv/errors.hpp"
#include "rtv/process.hpp"

namespace rtv {

// Bidirectional entailment/contradiction probabilities between the
// original rule x and the reconstruction x'. Derived values are always
// recomputed.
struct NLIScores {
    double e_fwd = 0.0;  // P(entailment | x, x')
    double e_bwd = 0.0;  // P(entailment | x', x)
    double c_fwd = 0.0;
    double c_bwd = 0.0;

    double e_min() const { return std::min(e_fwd, e_bwd); }
    double c_max() const { return std::max(c_fwd, c_bwd); }
};

enum class NLICategory { Contradiction, Equivalent, Strengthened, Weakened, Related, Unrelated };

inline std::string to_string(NLICategory c) {
    switch (c) {
        case NLICategory::Contradiction: return "Contradiction";
        case NLICategory::Equivalent: return "Equivalent";
        case NLICategory::Strengthened: return "Strengthened";
        case NLICategory::Weakened: return "Weakened";
        case NLICategory::Related: return "Related";
        case NLICategory::Unrelated: return "Unrelated";
    }
    return "?";
}

inline NLICategory nli_category_from_string(const std::string& s) {
    for (NLICategory c :
         {NLICategory::Contradiction, NLICategory::Equivalent, NLICategory::Strengthened,
          NLICategory::Weakened, NLICategory::Related, NLICategory::Unrelated}) {
        if (to_string(c) == s) return c;
    }
    throw ConfigError("unknown NLI category '" + s + "'");
}

// Six-way decision tree, first match wins; boundaries are inclusive
// exactly as printed.
inline NLICategory classify(const NLIScores& s) {
    for (double v : {s.e_fwd, s.e_bwd, s.c_fwd, s.c_bwd}) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error("NLI score out of range [0,1]: " + std::to_string(v));
        }
    }
    double e_min = s.e_min();
    double c_max = s.c_max();
    if (c_max >= 0.6) return NLICategory::Contradiction;
    if (e_min >= 0.7 && c_max < 0.2) return NLICategory::Equivalent;
    if (s.e_fwd >= 0.6 && s.e_bwd < 0.4) return NLICategory::Strengthened;
    if (s.e_bwd >= 0.6 && s.e_fwd < 0.4) return NLICategory::Weakened;
    if (e_min >= 0.3 && c_max < 0.3) return NLICategory::Related;
    return NLICategory::Unrelated;
}

// Deterministic built-in stand-in for a real NLI model: token overlap for
// entailment, one-sided negation markers for contradiction. Not a fidelity
// claim.
inline std::pair<double, double> score_lexical_baseline(const std::string& premise,
                                                        const std::string& hypothesis) {
    auto tokens = [](const std::string& text) {
        std::set<std::string> out;
        std::string cur;
        for (char ch : text) {
            unsigned char c = static_cast<unsigned char>(ch);
            if (std::isalnum(c)) {
                cur.push_back(static_cast<char>(std::tolower(c)));
            } else if (!cur.empty()) {
                out.insert(cur);
                cur.clear();
            }
        }
        if (!cur.empty()) out.insert(cur);
        return out;
    };
    static const std::set<std::string> kNegation = {"not", "no", "never", "except", "unless"};
    auto has_negation = [&](const std::set<std::string>& toks) {
        return std::any_of(kNegation.begin(), kNegation.end(),
                           [&](const std::string& n) { return toks.count(n) > 0; });
    };
    std::set<std::string> prem = tokens(premise);
    std::set<std::string> hyp = tokens(hypothesis);
    double entailment = 1.0;
    if (!hyp.empty()) {
        size_t shared = 0;
        for (const std::string& t : hyp) {
            if (prem.count(t)) ++shared;
        }
        entailment = static_cast<double>(shared) / static_cast<double>(hyp.size());
    }
    double contradiction = has_negation(prem) != has_negation(hyp) ? 0.8 : 0.0;
    return {entailment, contradiction};
}

// Scoring interface: returns (entailment, contradiction) for an ordered
// (premise, hypothesis) pair.
class NliScorer {
  public:
    virtual ~NliScorer() = default;
    virtual std::string name() const = 0;
    virtual std::pair<double, double> score(const std::string& premise,
                                            const std::string& hypothesis) = 0;
};

class BaselineScorer : public NliScorer {
  public:
    std::string name() const override { return "lexical-baseline"; }
    std::pair<double, double> score(const std::string& premise,
                                    const std::string& hypothesis) override {
        return score_lexical_baseline(premise, hypothesis);
    }
};

// External scorer process speaking newline-delimited JSON on its standard
// streams: {premise, hypothesis} in, {entailment, neutral, contradiction}
// out, probabilities summing to 1 (+-0.01).
class ExternalScorer : public NliScorer {
  public:
    explicit ExternalScorer(std::vector<std::string> command, bool pooled = true,
                            double timeout_seconds = 60.0)
        : command_(std::move(command)), pooled_(pooled), timeout_seconds_(timeout_seconds) {
        if (command_.empty()) throw ConfigError("external scorer needs a command");
    }

    std::string name() const override { return "external:" + command_[0]; }

    std::pair<double, double> score(const std::string& premise,
                                    const std::string& hypothesis) override {
        std::lock_guard<std::mutex> lock(mutex_);
        nlohmann::json request = {{"premise", premise}, {"hypothesis", hypothesis}};
        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(
                            static_cast<long long>(timeout_seconds_ * 1000.0));
        std::string line;
        try {
            if (pooled_) {
                if (!child_) child_ = spawn();
                child_->write_stdin(request.dump() + "\n");
                auto got = child_->read_line(deadline);
                if (!got) {
                    child_.reset();
                    throw ProtocolError("protocol-error: scorer closed its output");
                }
                line = *got;
            } else {
                auto child = spawn();
                child->write_stdin(request.dump() + "\n");
                child->close_stdin();
                auto got = child->read_line(deadline);
                if (!got) throw ProtocolError("protocol-error: scorer produced no reply");
                line = *got;
            }
        } catch (const ProcessError& e) {
            throw ProcessError(std::string("scorer-not-found: ") + e.what());
        }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("protocol-error: bad scorer reply: ") + e.what());
        }
        double entailment, neutral, contradiction;
        try {
            entailment = reply.at("entailment").get<double>();
            neutral = reply.at("neutral").get<double>();
            contradiction = reply.at("contradiction").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("protocol-error: bad scorer reply: ") + e.what());
        }
        double sum = entailment + neutral + contradiction;
        if (std::abs(sum - 1.0) > 0.01) {
            throw ProtocolError("non-normalized scorer reply: probabilities sum to " +
                                std::to_string(sum));
        }
        return {entailment, contradiction};
    }

  private:
    std::unique_ptr<ChildProcess> spawn() { return std::make_unique<ChildProcess>(command_); }

    std::vector<std::string> command_;
    bool pooled_;
    double timeout_seconds_;
    std::mutex mutex_;
    std::unique_ptr<ChildProcess> child_;
};

struct NliAssessment {
    NLIScores scores;
    NLICategory category = NLICategory::Unrelated;
};

// Scores both directions and classifies. Post-hoc diagnostics only; the
// repair loop never sees these values.
inline NliAssessment assess_pair(const std::string& x, const std::string& x_prime,
                                 NliScorer& scorer) {
    NLIScores scores;
    auto fwd = scorer.score(x, x_prime);
    auto bwd = scorer.score(x_prime, x);
    scores.e_fwd = fwd.first;
    scores.c_fwd = fwd.second;
    scores.e_bwd = bwd.first;
    scores.c_bwd = bwd.second;
    return NliAssessment{scores, classify(scores)};
}

}  // namespace rtv
