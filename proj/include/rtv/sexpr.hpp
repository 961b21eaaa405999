#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rtv/errors.hpp"

namespace rtv {

// Minimal s-expression reader for the SMT-LIB subset: atoms, lists, and
// ';' line comments. Every node keeps its source position for error
// reporting.
struct SExpr {
    enum class Kind { Atom, List };
    Kind kind = Kind::Atom;
    std::string atom;
    std::vector<SExpr> items;
    SourcePos pos;

    bool is_atom() const { return kind == Kind::Atom; }
    bool is_list() const { return kind == Kind::List; }
    bool is_atom(std::string_view text) const { return is_atom() && atom == text; }
};

struct SExprComment {
    std::string text;  // content after ';', trimmed
    SourcePos pos;
};

namespace detail {

class SExprReader {
  public:
    SExprReader(std::string_view text, std::vector<SExprComment>* comments)
        : text_(text), comments_(comments) {}

    std::vector<SExpr> read_all() {
        std::vector<SExpr> out;
        skip_trivia();
        while (!at_end()) {
            out.push_back(read_expr());
            skip_trivia();
        }
        return out;
    }

  private:
    bool at_end() const { return offset_ >= text_.size(); }
    char peek() const { return text_[offset_]; }

    void advance() {
        if (text_[offset_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++offset_;
    }

    SourcePos pos() const { return SourcePos{line_, column_}; }

    void skip_trivia() {
        while (!at_end()) {
            char c = peek();
            if (c == ';') {
                SourcePos start = pos();
                advance();
                std::string comment;
                while (!at_end() && peek() != '\n') {
                    comment.push_back(peek());
                    advance();
                }
                if (comments_) {
                    comments_->push_back(SExprComment{trim(comment), start});
                }
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    SExpr read_expr() {
        SourcePos start = pos();
        char c = peek();
        if (c == '(') {
            advance();
            SExpr list;
            list.kind = SExpr::Kind::List;
            list.pos = start;
            skip_trivia();
            while (!at_end() && peek() != ')') {
                list.items.push_back(read_expr());
                skip_trivia();
            }
            if (at_end()) {
                throw ParseError("unbalanced '(': missing ')'", start);
            }
            advance();  // consume ')'
            return list;
        }
        if (c == ')') {
            throw ParseError("unexpected ')'", start);
        }
        SExpr atom;
        atom.kind = SExpr::Kind::Atom;
        atom.pos = start;
        while (!at_end()) {
            char a = peek();
            if (a == '(' || a == ')' || a == ';' || a == ' ' || a == '\t' || a == '\r' ||
                a == '\n') {
                break;
            }
            atom.atom.push_back(a);
            advance();
        }
        return atom;
    }

    static std::string trim(const std::string& s) {
        size_t b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        size_t e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    std::string_view text_;
    std::vector<SExprComment>* comments_;
    size_t offset_ = 0;
    int line_ = 1;
    int column_ = 1;
};

}  // namespace detail

inline std::vector<SExpr> read_sexprs(std::string_view text,
                                      std::vector<SExprComment>* comments = nullptr) {
    return detail::SExprReader(text, comments).read_all();
}

// Reads exactly one expression; trailing content is an error.
inline SExpr read_one_sexpr(std::string_view text) {
    auto all = read_sexprs(text);
    if (all.empty()) {
        throw ParseError("expected an s-expression, found none", SourcePos{1, 1});
    }
    if (all.size() > 1) {
        throw ParseError("unexpected trailing content after s-expression", all[1].pos);
    }
    return all.front();
}

inline std::string render_sexpr(const SExpr& e) {
    if (e.is_atom()) return e.atom;
    std::string out = "(";
    for (size_t i = 0; i < e.items.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += render_sexpr(e.items[i]);
    }
    out.push_back(')');
    return out;
}

}  // namespace rtv
