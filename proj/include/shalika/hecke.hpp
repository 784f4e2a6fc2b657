#ifndef SHALIKA_HECKE_HPP
#define SHALIKA_HECKE_HPP

// Dominant-weight order, double-coset enumeration for the maximal-level
// and congruence-level Hecke operators, operator application, and the
// generic one-witness vanishing predicate.
//
// Coset enumeration is breadth-first over a (topologically dense)
// generating set of the level group acting on the starting coset from the
// left; representatives are deduplicated by exact coset membership tests
// and post-verified to have the unipotent-times-diagonal shape
// u * diag(p^{f sigma}) predicted for these operators.

#include "shalika/characters.hpp"
#include "shalika/cyclo.hpp"
#include "shalika/matgroup.hpp"
#include "shalika/matrix.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shalika {

class EnumerationBudgetExceeded : public std::runtime_error {
public:
    explicit EnumerationBudgetExceeded(const std::string& what)
        : std::runtime_error(what) {}
};

class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(const std::string& what)
        : std::runtime_error(what) {}
};

// f_1 >= ... >= f_r >= 0.
struct DominantWeight {
    std::vector<int> f;

    explicit DominantWeight(std::vector<int> weights);
    int rank() const { return static_cast<int>(f.size()); }

    // h_i = (1, ..., 1, 0, ..., 0) with i ones.
    static DominantWeight h(int i, int r);
};

// Lexicographic order read from the LAST coordinate: f < f' when, at the
// last index where they differ, f has the smaller entry.  Returns -1, 0,
// or 1; throws std::invalid_argument on length mismatch.
int lex_compare(const std::vector<int>& f, const std::vector<int>& fp);

enum class HeckeLevel {
    Maximal, // K_r-biinvariant operator T_f on G_r
    Gamma    // Gamma(c)-level operator T^c_{a h_i} on G_{r+1}
};

struct HeckeDescriptor {
    HeckeLevel level = HeckeLevel::Maximal;
    int r = 2;          // rank of the weight (matrices are r, or r+1 at
                        // Gamma level where the weight acts on the top block)
    std::vector<int> f; // the weight; at Gamma level it must equal a * h_i
    int c = 1;          // Gamma conductor

    int matrix_size() const {
        return level == HeckeLevel::Maximal ? r : r + 1;
    }
};

// Left-coset representatives alpha_j with (level group) f-double-coset
// = disjoint union of alpha_j * (level group).  Throws
// EnumerationBudgetExceeded if the orbit exceeds the internal cap.
std::vector<MatF> hecke_cosets(const FieldConfig* cfg,
                               const HeckeDescriptor& desc);

// Sum of ev over the right translates g * alpha_j.
CycloLaurent hecke_apply(
    const FieldConfig* cfg, const HeckeDescriptor& desc,
    const std::function<CycloLaurent(const MatF&)>& ev, const MatF& g);

// Collapsed coefficients of the Gamma-level action on psi-equivariant
// (Whittaker-type) inputs at the dominant diagonal point p^f: the list of
// (weight increment d = a h_i^sigma, coefficient c_sigma) with
// c_sigma = sum over representatives of shape u * diag(p^d, 1) of
// psi(superdiagonal of p^f u p^{-f}).  For dominant f and conductor-zero
// psi every c_sigma is a positive integer.
std::vector<std::pair<std::vector<int>, CycloLaurent>> collapsed_coefficients(
    const FieldConfig* cfg, const HeckeDescriptor& desc,
    const AdditiveChar& psi, const std::vector<int>& f);

// One-witness vanishing test: true when some h in the candidate families
// (one-parameter elementary unipotents and one-entry diagonal units,
// scanned deterministically) satisfies h in H, g0^{-1} h g0 in K, and
// xi(h) != omega(g0^{-1} h g0).  False means the candidate families are
// exhausted without a witness (not a proof of nonvanishing).  Each
// candidate consumes one unit of budget; running out before the families
// are exhausted raises BudgetExceeded.
bool vanishing_predicate(
    const MatF& g0, const SubgroupDescriptor& H,
    const std::function<CycloLaurent(const MatF&)>& xi,
    const SubgroupDescriptor& K,
    const std::function<CycloLaurent(const MatF&)>& omega, int budget);

} // namespace shalika

#endif
