#pragma once

// Seeded random formula pairs over a small vocabulary: each pair is either
// a meaning-preserving rewrite (expected equivalent) or an injected
// mutation (usually distinguishable). Domains stay tiny so the enumeration
// backend and, when present, an external solver can both answer quickly.

#include <string>
#include <vector>

#include "rtv/formula.hpp"
#include "rtv/splitmix64.hpp"

namespace formula_gen {

inline const char* small_schema_text() {
    return R"((declare-datatypes ((Color 0)) (((red) (green))))
(declare-sort Item 0)
(declare-fun flag () Bool)
(declare-fun active (Item) Bool)
(declare-fun linked (Item Item) Bool)
(declare-fun tagged (Item Int) Bool)
(declare-fun color_of (Item) Color)
)";
}

struct GeneratedPair {
    std::string a;
    std::string b;
    bool rewrite;  // true: sound rewrite of a; false: injected mutation
};

class Generator {
  public:
    explicit Generator(std::uint64_t seed) : stream_(seed) {}

    // A closed Bool formula of bounded depth quantifying over one Item and
    // one Int variable.
    std::string formula() {
        return "(forall ((x Item) (t Int)) " + boolean(2, true) + ")";
    }

    GeneratedPair pair() {
        GeneratedPair p;
        p.a = formula();
        p.rewrite = stream_.next_below(2) == 0;
        p.b = p.rewrite ? rewrite(p.a) : mutate(p.a);
        return p;
    }

    std::uint64_t draw(std::uint64_t bound) { return stream_.next_below(bound); }

  private:
    std::string boolean(int depth, bool allow_quant) {
        if (depth == 0) {
            switch (stream_.next_below(6)) {
                case 0: return "flag";
                case 1: return "(active x)";
                case 2: return "(linked x x)";
                case 3: return "(tagged x t)";
                case 4:
                    return "(= (color_of x) " +
                           std::string(stream_.next_below(2) ? "red" : "green") + ")";
                default: return stream_.next_below(2) ? "true" : "false";
            }
        }
        switch (stream_.next_below(allow_quant ? 6 : 5)) {
            case 0:
                return "(and " + boolean(depth - 1, false) + " " +
                       boolean(depth - 1, false) + ")";
            case 1:
                return "(or " + boolean(depth - 1, false) + " " +
                       boolean(depth - 1, false) + ")";
            case 2: return "(not " + boolean(depth - 1, false) + ")";
            case 3:
                return "(=> " + boolean(depth - 1, false) + " " +
                       boolean(depth - 1, false) + ")";
            case 4: return boolean(0, false);
            default:
                return "(exists ((y Item)) " +
                       std::string(stream_.next_below(2) ? "(linked x y)" : "(active y)") +
                       ")";
        }
    }

    // Meaning-preserving transformations of the quantifier body; each
    // output re-parses under the same schema.
    std::string rewrite(const std::string& f) {
        switch (stream_.next_below(5)) {
            case 0:
                return wrap_body(f, [](const std::string& body) {
                    return "(not (not " + body + "))";
                });
            case 1:
                return wrap_body(f, [](const std::string& body) {
                    return "(and true " + body + ")";
                });
            case 2:
                return wrap_body(f, [](const std::string& body) {
                    return "(or false " + body + ")";
                });
            case 3:
                return wrap_body(f, [](const std::string& body) {
                    return "(and " + body + " " + body + ")";
                });
            default:
                return wrap_body(f, [](const std::string& body) {
                    return "(=> true " + body + ")";
                });
        }
    }

    // Behavior-changing edits; a few may still come out equivalent, which
    // is fine (the checks only assert soundness, not completeness).
    std::string mutate(const std::string& f) {
        switch (stream_.next_below(4)) {
            case 0:
                return wrap_body(f, [](const std::string& body) {
                    return "(not " + body + ")";
                });
            case 1:
                return wrap_body(f, [](const std::string& body) {
                    return "(and (active x) " + body + ")";
                });
            case 2:
                return wrap_body(f, [](const std::string& body) {
                    return "(or (tagged x t) " + body + ")";
                });
            default:
                return wrap_body(f, [](const std::string& body) {
                    return "(=> " + body + " flag)";
                });
        }
    }

    template <typename F>
    std::string wrap_body(const std::string& f, F&& transform) {
        const std::string prefix = "(forall ((x Item) (t Int)) ";
        std::string body = f.substr(prefix.size(), f.size() - prefix.size() - 1);
        return prefix + transform(body) + ")";
    }

    rtv::SplitMix64 stream_;
};

}  // namespace formula_gen
