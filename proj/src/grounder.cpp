#include "difflog/grounder.hpp"

#include <algorithm>
#include <cassert>
#include <istream>
#include <ostream>

namespace difflog {

GroundAtomTable enumerate_ground_atoms(const Language& lang, const std::vector<std::uint32_t>& include) {
    GroundAtomTable table;
    table.push(false_atom());
    table.push(true_atom());

    for (std::uint32_t pid : include) {
        const Predicate& pred = lang.predicates[pid];
        for (std::uint32_t dt : pred.arg_datatypes) {
            if (lang.domain(dt).empty())
                throw ValidationError("empty domain for datatype '" + lang.datatypes[dt].name +
                                      "' required by predicate '" + pred.name + "'");
        }
        // Odometer over argument positions, first argument most significant.
        std::vector<std::size_t> pos(pred.arity(), 0);
        while (true) {
            Atom atom;
            atom.pred = pid;
            for (std::size_t i = 0; i < pred.arity(); ++i)
                atom.terms.push_back(Term::con(lang.domain(pred.arg_datatypes[i])[pos[i]]));
            table.push(atom);

            std::size_t i = pred.arity();
            while (i > 0) {
                --i;
                if (++pos[i] < lang.domain(pred.arg_datatypes[i]).size()) break;
                pos[i] = 0;
                if (i == 0) goto next_pred;
            }
        }
    next_pred:;
    }
    return table;
}

GroundAtomTable enumerate_ground_atoms(const Language& lang) {
    std::vector<std::uint32_t> all(lang.predicates.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    return enumerate_ground_atoms(lang, all);
}

namespace {

// Body variables left unbound by the head unifier, in first-occurrence order.
std::vector<std::uint32_t> existential_variables(const Clause& clause, const Substitution& theta_head) {
    std::vector<std::uint32_t> out;
    for (const Atom& b : clause.body) {
        for (std::uint32_t v : variables_of(b)) {
            if (theta_head.lookup(v)) continue;
            if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
        }
    }
    return out;
}

}  // namespace

std::vector<Substitution> enumerate_substitutions(const Clause& clause, const Atom& fact, const Language& lang) {
    assert(fact.ground());
    auto theta_head = unify(clause.head, fact);
    if (!theta_head) return {};

    std::vector<std::uint32_t> vars = existential_variables(clause, *theta_head);
    if (vars.empty()) return {Substitution{}};

    std::vector<std::uint32_t> var_dts = variable_datatypes(clause, lang);
    std::vector<const std::vector<std::uint32_t>*> domains;
    for (std::uint32_t v : vars) domains.push_back(&lang.domain(var_dts[v]));

    std::vector<Substitution> out;
    std::vector<std::size_t> pos(vars.size(), 0);
    while (true) {
        // A constant may not be bound to two variables of the same datatype.
        bool injective = true;
        for (std::size_t i = 0; i < vars.size() && injective; ++i)
            for (std::size_t j = i + 1; j < vars.size(); ++j)
                if (var_dts[vars[i]] == var_dts[vars[j]] && (*domains[i])[pos[i]] == (*domains[j])[pos[j]]) {
                    injective = false;
                    break;
                }
        if (injective) {
            Substitution theta;
            for (std::size_t i = 0; i < vars.size(); ++i)
                theta.bindings[vars[i]] = Term::con((*domains[i])[pos[i]]);
            out.push_back(std::move(theta));
        }
        std::size_t i = vars.size();
        while (i > 0) {
            --i;
            if (++pos[i] < domains[i]->size()) break;
            pos[i] = 0;
            if (i == 0) return out;
        }
    }
}

std::size_t compute_max_substitutions(const std::vector<Clause>& clauses, const GroundAtomTable& table,
                                      const Language& lang) {
    // |S_{i,j}| is the same for every fact the head unifies with: the head
    // unifier always binds exactly the head variables, so the count depends
    // only on the clause. One witness fact per clause suffices.
    std::size_t s = 0;
    for (const Clause& clause : clauses) {
        for (const Atom& fact : table.atoms) {
            if (fact.pred != clause.head.pred) continue;
            s = std::max(s, enumerate_substitutions(clause, fact, lang).size());
            break;
        }
    }
    return s;
}

IndexTensor build_index_tensor(const std::vector<Clause>& clauses, const GroundAtomTable& table,
                               const Language& lang, std::size_t budget) {
    assert(!clauses.empty());
    IndexTensor tensor;
    tensor.C = clauses.size();
    tensor.G = table.size();
    tensor.S = std::max<std::size_t>(1, compute_max_substitutions(clauses, table, lang));
    tensor.L = 1;
    for (const Clause& c : clauses) tensor.L = std::max(tensor.L, c.body.size());

    if (tensor.elements() > budget)
        throw BudgetError("index tensor needs " + std::to_string(tensor.elements()) + " elements (C=" +
                          std::to_string(tensor.C) + " G=" + std::to_string(tensor.G) + " S=" +
                          std::to_string(tensor.S) + " L=" + std::to_string(tensor.L) + "), budget is " +
                          std::to_string(budget));
    tensor.data.assign(tensor.elements(), 0);  // false everywhere by default

    for (std::size_t i = 0; i < clauses.size(); ++i) {
        const Clause& clause = clauses[i];
        for (std::size_t j = 0; j < table.atoms.size(); ++j) {
            const Atom& fact = table.atoms[j];
            if (fact.pred != clause.head.pred) continue;
            auto theta_head = unify(clause.head, fact);
            if (!theta_head) continue;
            std::vector<Substitution> subs = enumerate_substitutions(clause, fact, lang);
            for (std::size_t k = 0; k < subs.size(); ++k) {
                for (std::size_t l = 0; l < tensor.L; ++l) {
                    if (l < clause.body.size()) {
                        Atom subgoal = apply_substitution(apply_substitution(clause.body[l], *theta_head), subs[k]);
                        auto idx = table.index(subgoal);
                        if (!idx)
                            throw ValidationError("body atom '" + to_string(subgoal, lang) +
                                                  "' is not in the ground-atom table");
                        tensor.at(i, j, k, l) = *idx;
                    } else {
                        tensor.at(i, j, k, l) = 1;  // pad short bodies with true
                    }
                }
            }
        }
    }
    return tensor;
}

void write_index_tensor(std::ostream& out, const IndexTensor& tensor) {
    auto put_u32 = [&out](std::uint32_t v) {
        char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
        out.write(b, 4);
    };
    out.write("NSIX", 4);
    put_u32(static_cast<std::uint32_t>(tensor.C));
    put_u32(static_cast<std::uint32_t>(tensor.G));
    put_u32(static_cast<std::uint32_t>(tensor.S));
    put_u32(static_cast<std::uint32_t>(tensor.L));
    for (std::uint32_t v : tensor.data) put_u32(v);
}

IndexTensor read_index_tensor(std::istream& in) {
    auto get_u32 = [&in]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "NSIX") throw ValidationError("bad index tensor file: missing NSIX magic");
    IndexTensor tensor;
    tensor.C = get_u32();
    tensor.G = get_u32();
    tensor.S = get_u32();
    tensor.L = get_u32();
    tensor.data.resize(tensor.elements());
    for (std::uint32_t& v : tensor.data) v = get_u32();
    if (!in) throw ValidationError("bad index tensor file: truncated data");
    return tensor;
}

void write_atom_listing(std::ostream& out, const GroundAtomTable& table, const Language& lang) {
    for (std::size_t j = 0; j < table.atoms.size(); ++j) {
        const Atom& a = table.atoms[j];
        if (a.pred == kFalsePred) out << j << "\tfalse\n";
        else if (a.pred == kTruePred) out << j << "\ttrue\n";
        else out << j << "\t" << to_string(a, lang) << "\n";
    }
}

}  // namespace difflog
