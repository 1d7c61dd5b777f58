#ifndef DIFFLOG_ORACLE_HPP
#define DIFFLOG_ORACLE_HPP

#include <set>

#include "difflog/lang.hpp"

// Exact (crisp) bottom-up forward chaining, the ground-truth reference for
// the soft reasoner. Deliberately naive: correctness over speed.

namespace difflog {

struct FactSet {
    std::set<Atom> atoms;  // never contains the false atom; true is implicit

    bool contains(const Atom& a) const { return atoms.count(a) > 0; }
    bool insert(const Atom& a) { return atoms.insert(a).second; }
    std::size_t size() const { return atoms.size(); }

    friend bool operator==(const FactSet& a, const FactSet& b) { return a.atoms == b.atoms; }
};

// Naive evaluation to fixpoint: repeatedly add the head of every clause
// grounding whose body atoms are all present. Body-only variables range over
// their datatype domains with the same per-datatype injectivity rule the
// tensor encoding uses. Throws when max_rounds is exhausted before the
// fixpoint.
FactSet forward_chain(const std::vector<Clause>& clauses, const FactSet& facts, const Language& lang,
                      std::size_t max_rounds = 64);

bool entails(const std::vector<Clause>& clauses, const FactSet& facts, const Atom& query, const Language& lang,
             std::size_t max_rounds = 64);

// Longest chain of head-predicate dependencies; the default step count of
// the soft reasoner. Throws on cyclic programs (explicit step count needed).
std::size_t stratification_depth(const std::vector<Clause>& clauses, const Language& lang);

}  // namespace difflog

#endif
