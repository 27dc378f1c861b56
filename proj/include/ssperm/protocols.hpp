#pragma once

#include <vector>

#include "ssperm/engine.hpp"
#include "ssperm/sharing.hpp"

namespace ssperm {

// Element-wise functions P2 can evaluate in the clear after permutation.
// Identity is a test/bench convenience evaluated locally (no protocol run).
enum class ElementwiseFn : u8 {
  Relu = 0,
  Sigmoid = 1,
  Tanh = 2,
  ReluDeriv = 3,
  Identity = 4,
};

inline bool flip_compatible(ElementwiseFn f) {
  return f == ElementwiseFn::Sigmoid || f == ElementwiseFn::Tanh;
}

double eval_elementwise(ElementwiseFn f, double x);
const char* fn_name(ElementwiseFn f);

struct ClipAdjustment {
  std::vector<u64> indices_overflow;   // signed share >= 2^(L-2)
  std::vector<u64> indices_underflow;  // signed share < -2^(L-2)
};

// --- local ops (zero communication) -------------------------------------

SharedTensor add_shared(PartyEngine& eng, const SharedTensor& x,
                        const SharedTensor& y);
SharedTensor sub_shared(PartyEngine& eng, const SharedTensor& x,
                        const SharedTensor& y);
// P0 adds the encoded constant; P1 passes through.
SharedTensor add_public(PartyEngine& eng, const SharedTensor& x, double c);
// encode(c) - x, elementwise.
SharedTensor sub_from_public(PartyEngine& eng, double c,
                             const SharedTensor& x);
SharedTensor neg_shared(PartyEngine& eng, const SharedTensor& x);
// Integer constants scale shares exactly with no truncation.
SharedTensor mul_public_int(PartyEngine& eng, const SharedTensor& x, i64 c);
// Real constants go through encode + clip + truncate (one P0->P1 record).
SharedTensor mul_public(PartyEngine& eng, const SharedTensor& x, double c);
SharedTensor transpose_local(PartyEngine& eng, const SharedTensor& x);
SharedTensor sum_axis(PartyEngine& eng, const SharedTensor& x, int axis);

// --- clip + truncation ---------------------------------------------------

// Indices where P0's share leaves [-2^(L-2), 2^(L-2)); computed from P0's
// share alone.
ClipAdjustment find_clip_indices(const std::vector<u64>& share0);
void apply_clip_p0(std::vector<u64>& share0, const ClipAdjustment& adj);
void apply_clip_p1(std::vector<u64>& share1, const ClipAdjustment& adj);

// Protocol-level clip + truncate of a freshly multiplied (scale 2^2p)
// tensor. P0 finalizes immediately and queues the index record for P1; in
// eager mode the record is flushed on the spot.
void clip_and_truncate(PartyEngine& eng, SharedTensor& t);

// --- interactive ops ------------------------------------------------------

// Dealer (P2) triple generation. P1's shares come from the (P1,P2) PRG so
// nothing is sent to P1; P0 receives one TripleShare flight.
BeaverTriple dealer_gen_triple(PartyEngine& eng,
                               const std::vector<u64>& shape_x,
                               const std::vector<u64>& shape_y,
                               TripleKind kind);

SharedTensor mul_shared(PartyEngine& eng, const SharedTensor& x,
                        const SharedTensor& y);
SharedTensor matmul_shared(PartyEngine& eng, const SharedTensor& x,
                           const SharedTensor& w);

// Opens x to one party (or both); returns the plaintext on receiving
// parties, an empty tensor elsewhere.
PlainFixedTensor open_to(PartyEngine& eng, const SharedTensor& x, PartyId who);
PlainFixedTensor open_mutual(PartyEngine& eng, const SharedTensor& x);

// Compute-after-permutation: joint permutation (and optional sign
// flipping) of the flattened shares, evaluation of f in the clear on P2,
// PRG-based reshare, local inverse permutation.
SharedTensor cap(PartyEngine& eng, const SharedTensor& z, ElementwiseFn f,
                 bool flipping);

// Test-only baseline: per-share logical right shift without clipping; the
// overflow failure mode the clip exists to prevent.
inline u64 naive_shift_share(u64 share, int p) { return share >> p; }

}  // namespace ssperm
