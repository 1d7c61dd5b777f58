#ifndef DIFFLOG_LANG_HPP
#define DIFFLOG_LANG_HPP

#include <cstdint>
#include <optional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

// Typed function-free first-order language: datatypes, constants partitioned
// into inputs/objects/attributes, predicates with per-argument datatypes,
// clauses, substitution and unification.

namespace difflog {

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
    ValidationError(int line, int col, const std::string& msg)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg) {}
};

enum class ConstantKind { input, object, attribute };

struct DataType {
    std::string name;
};

struct Constant {
    std::string name;
    std::uint32_t datatype = 0;
    ConstantKind kind = ConstantKind::input;
};

struct Predicate {
    std::string name;
    std::vector<std::uint32_t> arg_datatypes;
    bool is_neural = false;
    std::string valuation_id;  // nonempty iff is_neural

    std::size_t arity() const { return arg_datatypes.size(); }
};

// A term is a constant (id into Language::constants) or a variable
// (id local to the enclosing clause / call scope).
struct Term {
    enum class Kind : std::uint8_t { constant, variable };
    Kind kind = Kind::constant;
    std::uint32_t id = 0;

    static Term con(std::uint32_t id) { return Term{Kind::constant, id}; }
    static Term var(std::uint32_t id) { return Term{Kind::variable, id}; }
    bool is_var() const { return kind == Kind::variable; }
    bool is_con() const { return kind == Kind::constant; }

    friend bool operator==(const Term& a, const Term& b) { return a.kind == b.kind && a.id == b.id; }
    friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
    friend bool operator<(const Term& a, const Term& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.id < b.id;
    }
};

struct Atom {
    std::uint32_t pred = 0;
    std::vector<Term> terms;

    bool ground() const {
        for (const Term& t : terms)
            if (t.is_var()) return false;
        return true;
    }

    friend bool operator==(const Atom& a, const Atom& b) { return a.pred == b.pred && a.terms == b.terms; }
    friend bool operator!=(const Atom& a, const Atom& b) { return !(a == b); }
    friend bool operator<(const Atom& a, const Atom& b) {
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.terms < b.terms;
    }
};

struct AtomHash {
    std::size_t operator()(const Atom& a) const {
        std::size_t h = std::hash<std::uint32_t>{}(a.pred);
        for (const Term& t : a.terms)
            h = h * 1000003u + (static_cast<std::size_t>(t.kind) << 31 | t.id);
        return h;
    }
};

// Definite clause. Variable ids are clause-local; var_names[i] is the
// surface name of variable i.
struct Clause {
    Atom head;
    std::vector<Atom> body;
    std::vector<std::string> var_names;
};

// Bindings from variable id to a term. The pipeline only ever binds
// constants (heads are unified against ground facts); variable-to-variable
// bindings appear only when unifying two non-ground atoms.
struct Substitution {
    std::map<std::uint32_t, Term> bindings;

    bool empty() const { return bindings.empty(); }
    std::optional<Term> lookup(std::uint32_t var) const {
        auto it = bindings.find(var);
        if (it == bindings.end()) return std::nullopt;
        return it->second;
    }
};

class Language {
public:
    std::vector<DataType> datatypes;
    std::vector<Constant> constants;
    std::vector<Predicate> predicates;

    std::uint32_t add_datatype(const std::string& name);
    std::uint32_t add_constant(const std::string& name, const std::string& datatype, ConstantKind kind);
    std::uint32_t add_predicate(const std::string& name, const std::vector<std::string>& arg_datatypes,
                                bool is_neural = false, const std::string& valuation_id = "");

    std::optional<std::uint32_t> datatype_id(const std::string& name) const;
    std::optional<std::uint32_t> constant_id(const std::string& name) const;
    std::optional<std::uint32_t> predicate_id(const std::string& name) const;

    // Constants of one datatype in declaration order.
    const std::vector<std::uint32_t>& domain(std::uint32_t datatype) const;
    // Attribute constants of one datatype in declaration order.
    std::vector<std::uint32_t> attribute_domain(std::uint32_t datatype) const;

private:
    std::unordered_map<std::string, std::uint32_t> datatype_ids_;
    std::unordered_map<std::string, std::uint32_t> constant_ids_;
    std::unordered_map<std::string, std::uint32_t> predicate_ids_;
    std::vector<std::vector<std::uint32_t>> domains_;
};

// --- parsing ---------------------------------------------------------------

// Language file: sections `datatype <name>`, `constant <name> : <dt> <kind>`,
// `pred <name>/<arity>[dt,...]`, `neural_pred <name>/<arity>[dt,...] = <id>`.
// "%" comments and blank lines allowed everywhere.
Language parse_language(const std::string& text);

// One clause, Prolog style, terminated by ".".
Clause parse_clause(const std::string& text, const Language& lang);

// One clause per line.
std::vector<Clause> parse_rules(const std::string& text, const Language& lang);

// One ground atom per line; trailing "." optional.
std::vector<Atom> parse_ground_atoms(const std::string& text, const Language& lang);

std::string to_string(const Atom& atom, const Language& lang, const std::vector<std::string>& var_names = {});
std::string to_string(const Clause& clause, const Language& lang);

// --- operations ------------------------------------------------------------

Atom apply_substitution(const Atom& atom, const Substitution& theta);

// Most general unifier for function-free atoms; absent when not unifiable.
// Equal variable ids on both sides denote the same variable.
std::optional<Substitution> unify(const Atom& a, const Atom& b);

// Variable ids in first-occurrence order, deduplicated.
std::vector<std::uint32_t> variables_of(const Atom& atom);

// Datatype of every variable of the clause, inferred from predicate argument
// positions; conflicting positions are an error.
std::vector<std::uint32_t> variable_datatypes(const Clause& clause, const Language& lang);

}  // namespace difflog

#endif
