#include "difflog/oracle.hpp"

#include <algorithm>
#include <functional>

#include "difflog/grounder.hpp"

namespace difflog {

namespace {

// One eager round: derives everything currently derivable. Eager insertion
// reaches the same least fixpoint as round-synchronous evaluation.
bool apply_round(const std::vector<Clause>& clauses, FactSet& facts, const Language& lang) {
    bool grew = false;
    for (const Clause& clause : clauses) {
        std::vector<std::uint32_t> var_dts = variable_datatypes(clause, lang);
        std::vector<std::uint32_t> head_vars = variables_of(clause.head);

        std::vector<std::uint32_t> body_only;
        for (const Atom& b : clause.body)
            for (std::uint32_t v : variables_of(b))
                if (std::find(head_vars.begin(), head_vars.end(), v) == head_vars.end() &&
                    std::find(body_only.begin(), body_only.end(), v) == body_only.end())
                    body_only.push_back(v);

        // Body-only variables are assigned injectively per datatype, the same
        // rule the tensor encoding applies to existential substitutions.
        std::function<bool(std::size_t, Substitution&)> body_satisfiable = [&](std::size_t bi, Substitution& th) {
            if (bi == body_only.size()) {
                for (const Atom& b : clause.body)
                    if (!facts.contains(apply_substitution(b, th))) return false;
                return true;
            }
            std::uint32_t v = body_only[bi];
            for (std::uint32_t c : lang.domain(var_dts[v])) {
                bool clash = false;
                for (std::size_t prev = 0; prev < bi && !clash; ++prev)
                    if (var_dts[body_only[prev]] == var_dts[v]) {
                        auto bound = th.lookup(body_only[prev]);
                        if (bound && bound->is_con() && bound->id == c) clash = true;
                    }
                if (clash) continue;
                th.bindings[v] = Term::con(c);
                bool ok = body_satisfiable(bi + 1, th);
                th.bindings.erase(v);
                if (ok) return true;
            }
            return false;
        };

        std::function<void(std::size_t, Substitution&)> ground_head = [&](std::size_t vi, Substitution& theta) {
            if (vi == head_vars.size()) {
                Atom head = apply_substitution(clause.head, theta);
                if (facts.contains(head)) return;
                Substitution th = theta;
                if (body_satisfiable(0, th)) {
                    facts.insert(head);
                    grew = true;
                }
                return;
            }
            std::uint32_t v = head_vars[vi];
            for (std::uint32_t c : lang.domain(var_dts[v])) {
                theta.bindings[v] = Term::con(c);
                ground_head(vi + 1, theta);
                theta.bindings.erase(v);
            }
        };
        Substitution theta;
        ground_head(0, theta);
    }
    return grew;
}

}  // namespace

FactSet forward_chain(const std::vector<Clause>& clauses, const FactSet& facts, const Language& lang,
                      std::size_t max_rounds) {
    FactSet closure = facts;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        if (!apply_round(clauses, closure, lang)) return closure;
    }
    if (apply_round(clauses, closure, lang))
        throw std::runtime_error("forward_chain: no fixpoint within " + std::to_string(max_rounds) + " rounds");
    return closure;
}

bool entails(const std::vector<Clause>& clauses, const FactSet& facts, const Atom& query, const Language& lang,
             std::size_t max_rounds) {
    if (query.pred == kTruePred) return true;
    if (query.pred == kFalsePred) return false;
    return forward_chain(clauses, facts, lang, max_rounds).contains(query);
}

std::size_t stratification_depth(const std::vector<Clause>& clauses, const Language& lang) {
    (void)lang;
    // depth(p) = 1 + max depth over body predicates of p's clauses; predicates
    // that never appear in a head have depth 0.
    std::vector<std::vector<const Clause*>> by_head;
    std::uint32_t max_pred = 0;
    for (const Clause& c : clauses) max_pred = std::max(max_pred, c.head.pred);
    by_head.resize(max_pred + 1);
    for (const Clause& c : clauses) by_head[c.head.pred].push_back(&c);

    enum class Mark { unseen, active, done };
    std::vector<Mark> marks(max_pred + 1, Mark::unseen);
    std::vector<std::size_t> depth(max_pred + 1, 0);

    std::function<std::size_t(std::uint32_t)> visit = [&](std::uint32_t p) -> std::size_t {
        if (p > max_pred || by_head[p].empty()) return 0;
        if (marks[p] == Mark::done) return depth[p];
        if (marks[p] == Mark::active)
            throw ValidationError("recursive program: stratification depth undefined, pass an explicit step count");
        marks[p] = Mark::active;
        std::size_t d = 1;
        for (const Clause* c : by_head[p])
            for (const Atom& b : c->body) d = std::max(d, 1 + visit(b.pred));
        marks[p] = Mark::done;
        depth[p] = d;
        return d;
    };

    std::size_t depth_max = 0;
    for (const Clause& c : clauses) depth_max = std::max(depth_max, visit(c.head.pred));
    return depth_max;
}

}  // namespace difflog
