#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rtv/sexpr.hpp"

namespace rtv {

enum class SortKind { Uninterpreted, Enumerated, Bool, Int, Real };

struct Sort {
    std::string name;
    SortKind kind = SortKind::Uninterpreted;
    std::vector<std::string> constructors;  // Enumerated only

    bool operator==(const Sort&) const = default;
};

struct Signature {
    std::string name;
    std::vector<std::string> arg_sorts;
    std::string result_sort;

    bool operator==(const Signature&) const = default;
};

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])))) return false;
    for (char c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

inline bool is_reserved_word(std::string_view s) {
    static const std::set<std::string, std::less<>> kReserved = {
        "true", "false", "forall", "exists", "and", "or",  "not", "ite",
        "let",  "Bool",  "Int",    "Real",   "as",  "par",
    };
    return kReserved.count(s) > 0;
}

// The declared vocabulary: sorts, enumerations, and function/predicate
// signatures, in declaration order. Immutable after load.
class Schema {
  public:
    Schema() = default;

    // Parses a sequence of declare-sort / declare-datatypes / declare-fun
    // forms. Line comments of the shape "; TAG: text" annotate the
    // declare-funs that follow them (until the next comment).
    static Schema load(const std::string& text) {
        Schema schema;
        schema.source_ = text;
        std::vector<SExprComment> comments;
        std::vector<SExpr> forms = read_sexprs(text, &comments);

        // Sweep comments and declarations in source order so annotation
        // comments attach to the right declare-funs.
        size_t next_comment = 0;
        std::string pending_annotation;
        for (const SExpr& form : forms) {
            while (next_comment < comments.size() &&
                   before(comments[next_comment].pos, form.pos)) {
                pending_annotation = annotation_of(comments[next_comment].text);
                ++next_comment;
            }
            schema.add_declaration(form, pending_annotation);
        }
        return schema;
    }

    const std::string& source_text() const { return source_; }

    // Canonical re-rendering of the declarations (annotations included);
    // re-parsing the result yields an equal Schema.
    std::string render_declarations() const {
        std::string out;
        for (const DeclRef& d : decls_) {
            switch (d.kind) {
                case DeclKind::SortDecl:
                    out += "(declare-sort " + d.names[0] + " 0)\n";
                    break;
                case DeclKind::DatatypeDecl: {
                    std::string heads, bodies;
                    for (size_t i = 0; i < d.names.size(); ++i) {
                        if (i > 0) {
                            heads += " ";
                            bodies += " ";
                        }
                        heads += "(" + d.names[i] + " 0)";
                        std::string ctors;
                        for (const std::string& c : sorts_.at(d.names[i]).constructors) {
                            if (!ctors.empty()) ctors += " ";
                            ctors += "(" + c + ")";
                        }
                        bodies += "(" + ctors + ")";
                    }
                    out += "(declare-datatypes (" + heads + ") (" + bodies + "))\n";
                    break;
                }
                case DeclKind::FunDecl: {
                    const Signature& sig = sigs_.at(d.names[0]);
                    auto ann = annotations_.find(sig.name);
                    if (ann != annotations_.end()) {
                        out += "; " + ann->second + "\n";
                    }
                    std::string args;
                    for (size_t i = 0; i < sig.arg_sorts.size(); ++i) {
                        if (i > 0) args += " ";
                        args += sig.arg_sorts[i];
                    }
                    out += "(declare-fun " + sig.name + " (" + args + ") " +
                           sig.result_sort + ")\n";
                    break;
                }
            }
        }
        return out;
    }

    const Sort* find_sort(std::string_view name) const {
        static const Sort kBool{"Bool", SortKind::Bool, {}};
        static const Sort kInt{"Int", SortKind::Int, {}};
        static const Sort kReal{"Real", SortKind::Real, {}};
        if (name == "Bool") return &kBool;
        if (name == "Int") return &kInt;
        if (name == "Real") return &kReal;
        auto it = sorts_.find(std::string(name));
        return it == sorts_.end() ? nullptr : &it->second;
    }

    const Signature* find_signature(std::string_view name) const {
        auto it = sigs_.find(std::string(name));
        return it == sigs_.end() ? nullptr : &it->second;
    }

    // Enum constructor -> its datatype sort, or nullptr.
    const Sort* find_constructor_sort(std::string_view ctor) const {
        auto it = constructor_sort_.find(std::string(ctor));
        return it == constructor_sort_.end() ? nullptr : find_sort(it->second);
    }

    const std::map<std::string, std::string>& annotations() const { return annotations_; }

    std::vector<const Sort*> declared_sorts() const {
        std::vector<const Sort*> out;
        for (const DeclRef& d : decls_) {
            if (d.kind == DeclKind::SortDecl || d.kind == DeclKind::DatatypeDecl) {
                for (const std::string& n : d.names) out.push_back(&sorts_.at(n));
            }
        }
        return out;
    }

    std::vector<const Signature*> declared_signatures() const {
        std::vector<const Signature*> out;
        for (const DeclRef& d : decls_) {
            if (d.kind == DeclKind::FunDecl) out.push_back(&sigs_.at(d.names[0]));
        }
        return out;
    }

    size_t uninterpreted_sort_count() const {
        return static_cast<size_t>(
            std::count_if(sorts_.begin(), sorts_.end(), [](const auto& kv) {
                return kv.second.kind == SortKind::Uninterpreted;
            }));
    }

    size_t sort_count() const { return sorts_.size(); }
    size_t signature_count() const { return sigs_.size(); }

    bool operator==(const Schema& other) const {
        return decls_ == other.decls_ && sorts_ == other.sorts_ && sigs_ == other.sigs_ &&
               annotations_ == other.annotations_;
    }

  private:
    enum class DeclKind { SortDecl, DatatypeDecl, FunDecl };
    struct DeclRef {
        DeclKind kind;
        std::vector<std::string> names;
        bool operator==(const DeclRef&) const = default;
    };

    static bool before(SourcePos a, SourcePos b) {
        return a.line < b.line || (a.line == b.line && a.column < b.column);
    }

    // "DURATIVE: true while maneuver ongoing" -> kept as annotation;
    // section headers and prose comments clear the pending annotation.
    static std::string annotation_of(const std::string& comment) {
        size_t colon = comment.find(':');
        if (colon == std::string::npos || colon == 0) return "";
        std::string_view tag(comment.data(), colon);
        if (!std::isupper(static_cast<unsigned char>(tag[0]))) return "";
        for (char c : tag) {
            if (!std::isupper(static_cast<unsigned char>(c)) &&
                !std::isdigit(static_cast<unsigned char>(c)) && c != '_') {
                return "";
            }
        }
        return comment;
    }

    void declare_name(const std::string& name, SourcePos pos) {
        if (!is_identifier(name) || is_reserved_word(name)) {
            throw SchemaError("invalid identifier '" + name + "' (" + to_string(pos) + ")");
        }
        if (sorts_.count(name) || sigs_.count(name) || constructor_sort_.count(name) ||
            name == "Bool" || name == "Int" || name == "Real") {
            throw SchemaError("duplicate-name: '" + name + "' already declared (" +
                              to_string(pos) + ")");
        }
    }

    void require_sort_exists(const std::string& name, const std::string& context,
                             SourcePos pos) {
        if (!find_sort(name)) {
            throw SchemaError("unknown-sort-reference: '" + name + "' in declaration of '" +
                              context + "' (" + to_string(pos) + ")");
        }
    }

    void add_declaration(const SExpr& form, std::string& pending_annotation) {
        if (!form.is_list() || form.items.empty() || !form.items[0].is_atom()) {
            throw SchemaError("expected a declaration form (" + to_string(form.pos) + ")");
        }
        const std::string& head = form.items[0].atom;
        if (head == "declare-sort") {
            if (form.items.size() != 3 || !form.items[1].is_atom() ||
                !form.items[2].is_atom("0")) {
                throw SchemaError(
                    "declare-sort expects a name and arity 0 (" + to_string(form.pos) + ")");
            }
            const std::string& name = form.items[1].atom;
            declare_name(name, form.items[1].pos);
            sorts_[name] = Sort{name, SortKind::Uninterpreted, {}};
            decls_.push_back({DeclKind::SortDecl, {name}});
        } else if (head == "declare-datatypes") {
            add_datatypes(form);
        } else if (head == "declare-fun") {
            add_fun(form, pending_annotation);
        } else {
            throw SchemaError("unsupported declaration '" + head + "' (" +
                              to_string(form.pos) + ")");
        }
    }

    void add_datatypes(const SExpr& form) {
        if (form.items.size() != 3 || !form.items[1].is_list() || !form.items[2].is_list() ||
            form.items[1].items.size() != form.items[2].items.size() ||
            form.items[1].items.empty()) {
            throw SchemaError(
                "declare-datatypes expects ((Name 0) ...) and one constructor list per "
                "name (" +
                to_string(form.pos) + ")");
        }
        std::vector<std::string> names;
        for (size_t i = 0; i < form.items[1].items.size(); ++i) {
            const SExpr& head = form.items[1].items[i];
            if (!head.is_list() || head.items.size() != 2 || !head.items[0].is_atom() ||
                !head.items[1].is_atom("0")) {
                throw SchemaError("datatype head must be (Name 0) (" + to_string(head.pos) +
                                  ")");
            }
            const std::string& name = head.items[0].atom;
            declare_name(name, head.pos);
            Sort sort{name, SortKind::Enumerated, {}};
            const SExpr& ctor_list = form.items[2].items[i];
            if (!ctor_list.is_list() || ctor_list.items.empty()) {
                throw SchemaError("enumerated sort '" + name +
                                  "' needs at least one constructor (" +
                                  to_string(ctor_list.pos) + ")");
            }
            for (const SExpr& ctor : ctor_list.items) {
                std::string cname;
                if (ctor.is_atom()) {
                    cname = ctor.atom;
                } else if (ctor.items.size() == 1 && ctor.items[0].is_atom()) {
                    cname = ctor.items[0].atom;
                } else {
                    throw SchemaError(
                        "only nullary constructors are supported in enumerations (" +
                        to_string(ctor.pos) + ")");
                }
                declare_name(cname, ctor.pos);
                constructor_sort_[cname] = name;
                sort.constructors.push_back(cname);
            }
            sorts_[name] = std::move(sort);
            names.push_back(name);
        }
        decls_.push_back({DeclKind::DatatypeDecl, std::move(names)});
    }

    void add_fun(const SExpr& form, std::string& pending_annotation) {
        if (form.items.size() != 4 || !form.items[1].is_atom() || !form.items[2].is_list() ||
            !form.items[3].is_atom()) {
            throw SchemaError("declare-fun expects (declare-fun name (args) result) (" +
                              to_string(form.pos) + ")");
        }
        const std::string& name = form.items[1].atom;
        declare_name(name, form.items[1].pos);
        Signature sig;
        sig.name = name;
        for (const SExpr& arg : form.items[2].items) {
            if (!arg.is_atom()) {
                throw SchemaError("argument sorts must be sort names (" +
                                  to_string(arg.pos) + ")");
            }
            require_sort_exists(arg.atom, name, arg.pos);
            sig.arg_sorts.push_back(arg.atom);
        }
        require_sort_exists(form.items[3].atom, name, form.items[3].pos);
        sig.result_sort = form.items[3].atom;
        sigs_[name] = std::move(sig);
        decls_.push_back({DeclKind::FunDecl, {name}});
        if (!pending_annotation.empty()) {
            annotations_[name] = pending_annotation;
        }
    }

    std::vector<DeclRef> decls_;
    std::map<std::string, Sort> sorts_;
    std::map<std::string, Signature> sigs_;
    std::map<std::string, std::string> constructor_sort_;
    std::map<std::string, std::string> annotations_;
    std::string source_;
};

}  // namespace rtv
