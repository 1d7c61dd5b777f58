#include "difflog/lang.hpp"

#include <cassert>
#include <cctype>
#include <sstream>

namespace difflog {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_variable_name(const std::string& s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

// Strips a "%" comment and surrounding whitespace.
std::string strip(const std::string& line) {
    std::string s = line;
    auto pos = s.find('%');
    if (pos != std::string::npos) s.erase(pos);
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

// Cursor over one clause/atom string; tracks column for error messages.
struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int line;

    Cursor(const std::string& t, int line_no) : text(t), line(line_no) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= text.size();
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    int col() const { return static_cast<int>(pos) + 1; }

    void expect(char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c)
            throw ValidationError(line, col(), std::string("expected '") + c + "'");
        ++pos;
    }
    bool accept(const std::string& s) {
        skip_ws();
        if (text.compare(pos, s.size(), s) == 0) {
            pos += s.size();
            return true;
        }
        return false;
    }
    std::string ident() {
        skip_ws();
        if (pos >= text.size() || !is_ident_start(text[pos]))
            throw ValidationError(line, col(), "expected identifier");
        std::size_t start = pos;
        while (pos < text.size() && is_ident_char(text[pos])) ++pos;
        return text.substr(start, pos - start);
    }
};

// Variable scope for one clause.
struct VarScope {
    std::vector<std::string> names;
    std::unordered_map<std::string, std::uint32_t> ids;

    std::uint32_t get(const std::string& name) {
        auto it = ids.find(name);
        if (it != ids.end()) return it->second;
        std::uint32_t id = static_cast<std::uint32_t>(names.size());
        names.push_back(name);
        ids.emplace(name, id);
        return id;
    }
};

Atom parse_atom(Cursor& cur, const Language& lang, VarScope& vars) {
    int col0 = cur.col();
    std::string name = cur.ident();
    auto pid = lang.predicate_id(name);
    if (!pid) throw ValidationError(cur.line, col0, "unknown predicate '" + name + "'");
    const Predicate& pred = lang.predicates[*pid];

    Atom atom;
    atom.pred = *pid;
    cur.expect('(');
    for (std::size_t i = 0; i < pred.arity(); ++i) {
        if (i > 0) cur.expect(',');
        int tcol = cur.col();
        std::string tok = cur.ident();
        if (is_variable_name(tok)) {
            atom.terms.push_back(Term::var(vars.get(tok)));
        } else {
            auto cid = lang.constant_id(tok);
            if (!cid) throw ValidationError(cur.line, tcol, "unknown constant '" + tok + "'");
            if (lang.constants[*cid].datatype != pred.arg_datatypes[i])
                throw ValidationError(cur.line, tcol,
                                      "type mismatch: constant '" + tok + "' has datatype '" +
                                          lang.datatypes[lang.constants[*cid].datatype].name + "', position " +
                                          std::to_string(i + 1) + " of '" + pred.name + "' expects '" +
                                          lang.datatypes[pred.arg_datatypes[i]].name + "'");
            atom.terms.push_back(Term::con(*cid));
        }
    }
    cur.expect(')');
    return atom;
}

}  // namespace

// --- Language --------------------------------------------------------------

std::uint32_t Language::add_datatype(const std::string& name) {
    if (datatype_ids_.count(name)) throw ValidationError("duplicate datatype '" + name + "'");
    std::uint32_t id = static_cast<std::uint32_t>(datatypes.size());
    datatypes.push_back(DataType{name});
    datatype_ids_.emplace(name, id);
    domains_.emplace_back();
    return id;
}

std::uint32_t Language::add_constant(const std::string& name, const std::string& datatype, ConstantKind kind) {
    if (constant_ids_.count(name)) throw ValidationError("duplicate constant '" + name + "'");
    if (is_variable_name(name)) throw ValidationError("constant '" + name + "' must not start uppercase");
    auto dt = datatype_id(datatype);
    if (!dt) throw ValidationError("unknown datatype '" + datatype + "'");
    std::uint32_t id = static_cast<std::uint32_t>(constants.size());
    constants.push_back(Constant{name, *dt, kind});
    constant_ids_.emplace(name, id);
    domains_[*dt].push_back(id);
    return id;
}

std::uint32_t Language::add_predicate(const std::string& name, const std::vector<std::string>& arg_datatypes,
                                      bool is_neural, const std::string& valuation_id) {
    if (predicate_ids_.count(name)) throw ValidationError("duplicate predicate '" + name + "'");
    if (arg_datatypes.empty()) throw ValidationError("predicate '" + name + "' must have arity >= 1");
    Predicate p;
    p.name = name;
    p.is_neural = is_neural;
    p.valuation_id = valuation_id;
    for (const std::string& dt : arg_datatypes) {
        auto id = datatype_id(dt);
        if (!id) throw ValidationError("unknown datatype '" + dt + "' in predicate '" + name + "'");
        p.arg_datatypes.push_back(*id);
    }
    std::uint32_t id = static_cast<std::uint32_t>(predicates.size());
    predicates.push_back(std::move(p));
    predicate_ids_.emplace(name, id);
    return id;
}

std::optional<std::uint32_t> Language::datatype_id(const std::string& name) const {
    auto it = datatype_ids_.find(name);
    if (it == datatype_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> Language::constant_id(const std::string& name) const {
    auto it = constant_ids_.find(name);
    if (it == constant_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> Language::predicate_id(const std::string& name) const {
    auto it = predicate_ids_.find(name);
    if (it == predicate_ids_.end()) return std::nullopt;
    return it->second;
}

const std::vector<std::uint32_t>& Language::domain(std::uint32_t datatype) const {
    assert(datatype < domains_.size());
    return domains_[datatype];
}

std::vector<std::uint32_t> Language::attribute_domain(std::uint32_t datatype) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t c : domain(datatype))
        if (constants[c].kind == ConstantKind::attribute) out.push_back(c);
    return out;
}

// --- parsing ---------------------------------------------------------------

Language parse_language(const std::string& text) {
    Language lang;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip(raw);
        if (line.empty()) continue;
        std::vector<std::string> words = split_words(line);
        const std::string& kw = words[0];
        try {
            if (kw == "datatype") {
                if (words.size() != 2) throw ValidationError("usage: datatype <name>");
                lang.add_datatype(words[1]);
            } else if (kw == "constant") {
                // constant <name> : <datatype> <kind>
                if (words.size() != 5 || words[2] != ":")
                    throw ValidationError("usage: constant <name> : <datatype> <input|object|attribute>");
                ConstantKind kind;
                if (words[4] == "input") kind = ConstantKind::input;
                else if (words[4] == "object") kind = ConstantKind::object;
                else if (words[4] == "attribute") kind = ConstantKind::attribute;
                else throw ValidationError("unknown constant kind '" + words[4] + "'");
                lang.add_constant(words[1], words[3], kind);
            } else if (kw == "pred" || kw == "neural_pred") {
                // pred name/arity[dt1,...]  |  neural_pred name/arity[dt1,...] = valuation
                std::string decl;
                for (std::size_t i = 1; i < words.size(); ++i) decl += words[i];
                std::string valuation;
                if (kw == "neural_pred") {
                    auto eq = decl.find('=');
                    if (eq == std::string::npos) throw ValidationError("neural_pred requires '= <valuation-id>'");
                    valuation = decl.substr(eq + 1);
                    decl.erase(eq);
                    if (valuation.empty()) throw ValidationError("empty valuation id");
                }
                auto slash = decl.find('/');
                auto lb = decl.find('[');
                if (slash == std::string::npos || lb == std::string::npos || decl.back() != ']')
                    throw ValidationError("usage: " + kw + " <name>/<arity>[dt1,...]");
                std::string name = decl.substr(0, slash);
                int arity = std::stoi(decl.substr(slash + 1, lb - slash - 1));
                std::vector<std::string> dts;
                std::string inner = decl.substr(lb + 1, decl.size() - lb - 2);
                std::istringstream dss(inner);
                std::string dt;
                while (std::getline(dss, dt, ',')) dts.push_back(dt);
                if (static_cast<int>(dts.size()) != arity)
                    throw ValidationError("arity " + std::to_string(arity) + " does not match " +
                                          std::to_string(dts.size()) + " datatypes");
                lang.add_predicate(name, dts, kw == "neural_pred", valuation);
            } else {
                throw ValidationError("unknown directive '" + kw + "'");
            }
        } catch (const ValidationError& e) {
            throw ValidationError(line_no, 1, e.what());
        }
    }
    return lang;
}

Clause parse_clause(const std::string& text, const Language& lang) {
    Cursor cur(text, 1);
    VarScope vars;
    Clause clause;
    clause.head = parse_atom(cur, lang, vars);
    if (cur.accept(":-")) {
        do {
            clause.body.push_back(parse_atom(cur, lang, vars));
        } while (cur.accept(","));
    }
    cur.expect('.');
    if (!cur.eof()) throw ValidationError(cur.line, cur.col(), "trailing input after clause");
    clause.var_names = std::move(vars.names);
    variable_datatypes(clause, lang);  // rejects conflicting variable types
    return clause;
}

std::vector<Clause> parse_rules(const std::string& text, const Language& lang) {
    std::vector<Clause> out;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip(raw);
        if (line.empty()) continue;
        try {
            out.push_back(parse_clause(line, lang));
        } catch (const ValidationError& e) {
            throw ValidationError(line_no, 1, e.what());
        }
    }
    return out;
}

std::vector<Atom> parse_ground_atoms(const std::string& text, const Language& lang) {
    std::vector<Atom> out;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip(raw);
        if (line.empty()) continue;
        if (line.back() != '.') line += '.';
        try {
            Cursor cur(line, line_no);
            VarScope vars;
            Atom atom = parse_atom(cur, lang, vars);
            cur.expect('.');
            if (!vars.names.empty())
                throw ValidationError(line_no, 1, "atom must be ground, found variable '" + vars.names[0] + "'");
            out.push_back(std::move(atom));
        } catch (const ValidationError& e) {
            throw ValidationError(line_no, 1, e.what());
        }
    }
    return out;
}

std::string to_string(const Atom& atom, const Language& lang, const std::vector<std::string>& var_names) {
    std::string s = lang.predicates[atom.pred].name + "(";
    for (std::size_t i = 0; i < atom.terms.size(); ++i) {
        if (i > 0) s += ",";
        const Term& t = atom.terms[i];
        if (t.is_con()) s += lang.constants[t.id].name;
        else if (t.id < var_names.size()) s += var_names[t.id];
        else s += "V" + std::to_string(t.id);
    }
    return s + ")";
}

std::string to_string(const Clause& clause, const Language& lang) {
    std::string s = to_string(clause.head, lang, clause.var_names);
    if (!clause.body.empty()) {
        s += ":-";
        for (std::size_t i = 0; i < clause.body.size(); ++i) {
            if (i > 0) s += ",";
            s += to_string(clause.body[i], lang, clause.var_names);
        }
    }
    return s + ".";
}

// --- operations ------------------------------------------------------------

Atom apply_substitution(const Atom& atom, const Substitution& theta) {
    Atom out = atom;
    for (Term& t : out.terms) {
        while (t.is_var()) {
            auto bound = theta.lookup(t.id);
            if (!bound || *bound == t) break;
            t = *bound;
        }
    }
    return out;
}

std::optional<Substitution> unify(const Atom& a, const Atom& b) {
    if (a.pred != b.pred || a.terms.size() != b.terms.size()) return std::nullopt;

    Substitution theta;
    auto resolve = [&theta](Term t) {
        while (t.is_var()) {
            auto bound = theta.lookup(t.id);
            if (!bound || *bound == t) break;
            t = *bound;
        }
        return t;
    };

    for (std::size_t i = 0; i < a.terms.size(); ++i) {
        Term x = resolve(a.terms[i]);
        Term y = resolve(b.terms[i]);
        if (x == y) continue;
        if (x.is_var()) theta.bindings[x.id] = y;
        else if (y.is_var()) theta.bindings[y.id] = x;
        else return std::nullopt;  // distinct constants
    }
    // Resolve chains so the unifier is idempotent.
    for (auto& [var, term] : theta.bindings) term = resolve(term);
    return theta;
}

std::vector<std::uint32_t> variables_of(const Atom& atom) {
    std::vector<std::uint32_t> out;
    for (const Term& t : atom.terms) {
        if (!t.is_var()) continue;
        bool seen = false;
        for (std::uint32_t v : out)
            if (v == t.id) { seen = true; break; }
        if (!seen) out.push_back(t.id);
    }
    return out;
}

std::vector<std::uint32_t> variable_datatypes(const Clause& clause, const Language& lang) {
    constexpr std::uint32_t unset = 0xffffffffu;
    std::vector<std::uint32_t> dts(clause.var_names.size(), unset);

    auto visit = [&](const Atom& atom) {
        const Predicate& pred = lang.predicates[atom.pred];
        for (std::size_t i = 0; i < atom.terms.size(); ++i) {
            const Term& t = atom.terms[i];
            if (!t.is_var()) continue;
            std::uint32_t want = pred.arg_datatypes[i];
            if (dts[t.id] == unset) {
                dts[t.id] = want;
            } else if (dts[t.id] != want) {
                std::string name = t.id < clause.var_names.size() ? clause.var_names[t.id] : "?";
                throw ValidationError("type mismatch: variable '" + name + "' used as '" +
                                      lang.datatypes[dts[t.id]].name + "' and '" + lang.datatypes[want].name + "'");
            }
        }
    };
    visit(clause.head);
    for (const Atom& b : clause.body) visit(b);
    return dts;
}

}  // namespace difflog
