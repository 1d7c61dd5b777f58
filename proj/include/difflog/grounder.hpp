#ifndef DIFFLOG_GROUNDER_HPP
#define DIFFLOG_GROUNDER_HPP

#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "difflog/lang.hpp"

// Grounding: the ordered ground-atom universe with false/true sentinels at
// indices 0/1, existential substitution sets per (clause, fact) pair, and the
// C x G x S x L index tensor driving tensorized forward inference.

namespace difflog {

class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// Reserved predicate ids for the sentinel atoms.
inline constexpr std::uint32_t kFalsePred = 0xfffffffeu;
inline constexpr std::uint32_t kTruePred = 0xffffffffu;

inline Atom false_atom() { return Atom{kFalsePred, {}}; }
inline Atom true_atom() { return Atom{kTruePred, {}}; }

class GroundAtomTable {
public:
    // atoms[0] is false, atoms[1] is true, then all well-typed ground
    // instances of the included predicates in (declaration order,
    // lexicographic argument tuple) order.
    std::vector<Atom> atoms;

    std::size_t size() const { return atoms.size(); }
    std::optional<std::uint32_t> index(const Atom& atom) const {
        auto it = index_.find(atom);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    void push(const Atom& atom) {
        index_.emplace(atom, static_cast<std::uint32_t>(atoms.size()));
        atoms.push_back(atom);
    }

private:
    std::unordered_map<Atom, std::uint32_t, AtomHash> index_;
};

// Enumerates false, true, then every ground instance of the given predicates.
// Empty include list yields the two-element table.
GroundAtomTable enumerate_ground_atoms(const Language& lang, const std::vector<std::uint32_t>& include);

// All predicates of the language.
GroundAtomTable enumerate_ground_atoms(const Language& lang);

// The substitutions for existentially quantified body variables of one
// (clause, fact) pair: head unifier applied first, remaining body variables
// assigned all combinations from their datatype domains, filtered so that no
// constant is shared between two variables of the same datatype. Empty when
// the head does not unify.
std::vector<Substitution> enumerate_substitutions(const Clause& clause, const Atom& fact, const Language& lang);

// max_{i,j} |S_{i,j}| over all clause x fact pairs (0 if no head unifies).
std::size_t compute_max_substitutions(const std::vector<Clause>& clauses, const GroundAtomTable& table,
                                      const Language& lang);

struct IndexTensor {
    std::size_t C = 0, G = 0, S = 0, L = 0;
    std::vector<std::uint32_t> data;  // row-major [C][G][S][L]

    std::uint32_t at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data[((i * G + j) * S + k) * L + l];
    }
    std::uint32_t& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data[((i * G + j) * S + k) * L + l];
    }
    std::size_t elements() const { return C * G * S * L; }

    // Number of filled (row, slot, position) entries: the inference work per
    // batch element. Derived, not serialized.
    std::size_t live_entries() const {
        std::size_t live = 0;
        for (std::size_t i = 0; i < C; ++i)
            for (std::size_t j = 0; j < G; ++j) {
                std::size_t k = 0;
                while (k < S && at(i, j, k, 0) != 0) ++k;
                live += k * L;
            }
        return live;
    }
};

inline constexpr std::size_t kDefaultElementBudget = 500'000'000;

// Entry [i,j,k,l] = index of the l-th body atom of clause i under the head
// unifier with fact j composed with the k-th existential substitution;
// true's index (1) pads short bodies, false's index (0) fills non-unifiable
// rows and dead substitution slots.
IndexTensor build_index_tensor(const std::vector<Clause>& clauses, const GroundAtomTable& table,
                               const Language& lang, std::size_t budget = kDefaultElementBudget);

// Binary format: magic "NSIX", little-endian u32 C,G,S,L, then row-major u32
// entries.
void write_index_tensor(std::ostream& out, const IndexTensor& tensor);
IndexTensor read_index_tensor(std::istream& in);

// Sidecar listing of the ground-atom universe, one atom per line.
void write_atom_listing(std::ostream& out, const GroundAtomTable& table, const Language& lang);

}  // namespace difflog

#endif
