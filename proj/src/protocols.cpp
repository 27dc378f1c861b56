#include "ssperm/protocols.hpp"

#include <cmath>

namespace ssperm {

double eval_elementwise(ElementwiseFn f, double x) {
  switch (f) {
    case ElementwiseFn::Relu: return x > 0 ? x : 0.0;
    case ElementwiseFn::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ElementwiseFn::Tanh: return std::tanh(x);
    case ElementwiseFn::ReluDeriv: return x > 0 ? 1.0 : 0.0;
    case ElementwiseFn::Identity: return x;
  }
  throw ProtocolError("unknown elementwise fn");
}

const char* fn_name(ElementwiseFn f) {
  switch (f) {
    case ElementwiseFn::Relu: return "relu";
    case ElementwiseFn::Sigmoid: return "sigmoid";
    case ElementwiseFn::Tanh: return "tanh";
    case ElementwiseFn::ReluDeriv: return "reluderiv";
    case ElementwiseFn::Identity: return "identity";
  }
  return "?";
}

static void check_same_shape(const SharedTensor& x, const SharedTensor& y,
                             const char* op) {
  if (x.shape != y.shape)
    throw ShapeMismatchError(std::string(op) + ": shape mismatch");
}

static SharedTensor shape_only(PartyEngine& eng, std::vector<u64> shape,
                               u64 tid) {
  SharedTensor t;
  t.shape = std::move(shape);
  t.owner = eng.role();
  t.tensor_id = tid;
  return t;
}

// --- local ops ---------------------------------------------------------------

SharedTensor add_shared(PartyEngine& eng, const SharedTensor& x,
                        const SharedTensor& y) {
  check_same_shape(x, y, "add");
  eng.materialize(x);
  eng.materialize(y);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  std::vector<u64> out(x.vals().size());
  for (size_t i = 0; i < out.size(); i++)
    out[i] = ring_add(x.vals()[i], y.vals()[i]);
  SharedTensor t(x.shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor sub_shared(PartyEngine& eng, const SharedTensor& x,
                        const SharedTensor& y) {
  check_same_shape(x, y, "sub");
  eng.materialize(x);
  eng.materialize(y);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  std::vector<u64> out(x.vals().size());
  for (size_t i = 0; i < out.size(); i++)
    out[i] = ring_sub(x.vals()[i], y.vals()[i]);
  SharedTensor t(x.shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor add_public(PartyEngine& eng, const SharedTensor& x, double c) {
  eng.materialize(x);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  u64 k = encode(c, eng.fx());
  std::vector<u64> out = x.vals();
  if (eng.is(PartyId::P0))
    for (auto& v : out) v = ring_add(v, k);
  SharedTensor t(x.shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor sub_from_public(PartyEngine& eng, double c,
                             const SharedTensor& x) {
  eng.materialize(x);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  u64 k = encode(c, eng.fx());
  std::vector<u64> out(x.vals().size());
  for (size_t i = 0; i < out.size(); i++) {
    out[i] = eng.is(PartyId::P0) ? ring_sub(k, x.vals()[i])
                                 : ring_neg(x.vals()[i]);
  }
  SharedTensor t(x.shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor neg_shared(PartyEngine& eng, const SharedTensor& x) {
  eng.materialize(x);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  std::vector<u64> out(x.vals().size());
  for (size_t i = 0; i < out.size(); i++) out[i] = ring_neg(x.vals()[i]);
  SharedTensor t(x.shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor mul_public_int(PartyEngine& eng, const SharedTensor& x, i64 c) {
  eng.materialize(x);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  u64 k = static_cast<u64>(c);
  std::vector<u64> out(x.vals().size());
  for (size_t i = 0; i < out.size(); i++) out[i] = ring_mul(x.vals()[i], k);
  SharedTensor t(x.shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor mul_public(PartyEngine& eng, const SharedTensor& x, double c) {
  eng.materialize(x);
  eng.begin_op("mul_public");
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  u64 k = encode(c, eng.fx());
  std::vector<u64> out(x.vals().size());
  for (size_t i = 0; i < out.size(); i++) out[i] = ring_mul(x.vals()[i], k);
  SharedTensor t(x.shape, std::move(out), eng.role(), tid);
  clip_and_truncate(eng, t);
  return t;
}

SharedTensor transpose_local(PartyEngine& eng, const SharedTensor& x) {
  if (x.shape.size() != 2) throw ShapeMismatchError("transpose: want 2-d");
  eng.materialize(x);
  u64 tid = eng.alloc_tensor_id();
  std::vector<u64> shape = {x.shape[1], x.shape[0]};
  if (eng.is(PartyId::P2)) return shape_only(eng, std::move(shape), tid);
  size_t r = x.shape[0], c = x.shape[1];
  std::vector<u64> out(r * c);
  for (size_t i = 0; i < r; i++)
    for (size_t j = 0; j < c; j++) out[j * r + i] = x.vals()[i * c + j];
  SharedTensor t(shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

SharedTensor sum_axis(PartyEngine& eng, const SharedTensor& x, int axis) {
  if (x.shape.size() != 2) throw ShapeMismatchError("sum_axis: want 2-d");
  if (axis != 0 && axis != 1) throw ShapeMismatchError("sum_axis: bad axis");
  eng.materialize(x);
  u64 tid = eng.alloc_tensor_id();
  size_t r = x.shape[0], c = x.shape[1];
  std::vector<u64> shape = {axis == 0 ? x.shape[1] : x.shape[0]};
  if (eng.is(PartyId::P2)) return shape_only(eng, std::move(shape), tid);
  std::vector<u64> out(axis == 0 ? c : r, 0);
  for (size_t i = 0; i < r; i++)
    for (size_t j = 0; j < c; j++) {
      size_t k = axis == 0 ? j : i;
      out[k] = ring_add(out[k], x.vals()[i * c + j]);
    }
  SharedTensor t(shape, std::move(out), eng.role(), tid);
  eng.note_final(t);
  return t;
}

// --- clip + truncate ---------------------------------------------------------

static constexpr u64 kClipStep = u64(1) << (kRingBits - 2);
static constexpr i64 kClipBound = i64(1) << (kRingBits - 2);

ClipAdjustment find_clip_indices(const std::vector<u64>& share0) {
  ClipAdjustment adj;
  for (size_t i = 0; i < share0.size(); i++) {
    i64 s = ring_signed(share0[i]);
    if (s >= kClipBound) adj.indices_overflow.push_back(i);
    else if (s < -kClipBound) adj.indices_underflow.push_back(i);
  }
  return adj;
}

void apply_clip_p0(std::vector<u64>& share0, const ClipAdjustment& adj) {
  for (u64 i : adj.indices_overflow)
    share0[i] = ring_sub(share0[i], kClipStep);
  for (u64 i : adj.indices_underflow)
    share0[i] = ring_add(share0[i], kClipStep);
}

void apply_clip_p1(std::vector<u64>& share1, const ClipAdjustment& adj) {
  for (u64 i : adj.indices_overflow)
    share1[i] = ring_add(share1[i], kClipStep);
  for (u64 i : adj.indices_underflow)
    share1[i] = ring_sub(share1[i], kClipStep);
}

void clip_and_truncate(PartyEngine& eng, SharedTensor& t) {
  if (eng.is(PartyId::P2)) return;
  if (eng.is(PartyId::P0)) {
    ClipAdjustment adj = find_clip_indices(t.vals());
    apply_clip_p0(t.vals(), adj);
    if (eng.monitor()) eng.monitor()->check_clipped_share(t.vals());
    truncate_share_inplace(t.vals(), eng.fx());
    eng.queue_clip_record(
        ClipRecord{t.tensor_id, adj.indices_overflow, adj.indices_underflow});
    eng.note_final(t);
  } else {
    t.pending_clip = std::make_shared<bool>(true);
    eng.park_pending(t);
  }
}

// --- triples -----------------------------------------------------------------

BeaverTriple dealer_gen_triple(PartyEngine& eng,
                               const std::vector<u64>& shape_x,
                               const std::vector<u64>& shape_y,
                               TripleKind kind) {
  u64 nx = PlainFixedTensor::numel_of(shape_x);
  u64 ny = PlainFixedTensor::numel_of(shape_y);
  std::vector<u64> shape_w;
  u64 nw = 0;
  if (kind == TripleKind::Elementwise) {
    if (shape_x != shape_y) throw ShapeMismatchError("triple: shape mismatch");
    shape_w = shape_x;
    nw = nx;
  } else {
    if (shape_x.size() != 2 || shape_y.size() != 2 ||
        shape_x[1] != shape_y[0])
      throw ShapeMismatchError("triple: matmul dims");
    shape_w = {shape_x[0], shape_y[1]};
    nw = shape_w[0] * shape_w[1];
  }
  u64 tid_u = eng.alloc_tensor_id();
  u64 tid_v = eng.alloc_tensor_id();
  u64 tid_w = eng.alloc_tensor_id();

  BeaverTriple triple;
  triple.kind = kind;
  if (eng.is(PartyId::P1)) {
    // P1's shares come straight off the (P1,P2) stream: zero traffic.
    triple.u = SharedTensor(shape_x, eng.prg_p1p2().next_u64s(nx),
                            PartyId::P1, tid_u);
    triple.v = SharedTensor(shape_y, eng.prg_p1p2().next_u64s(ny),
                            PartyId::P1, tid_v);
    triple.w = SharedTensor(shape_w, eng.prg_p1p2().next_u64s(nw),
                            PartyId::P1, tid_w);
  } else if (eng.is(PartyId::P2)) {
    std::vector<u64> u1 = eng.prg_p1p2().next_u64s(nx);
    std::vector<u64> v1 = eng.prg_p1p2().next_u64s(ny);
    std::vector<u64> w1 = eng.prg_p1p2().next_u64s(nw);
    std::vector<u64> u = eng.private_rng().next_u64s(nx);
    std::vector<u64> v = eng.private_rng().next_u64s(ny);
    std::vector<u64> w;
    if (kind == TripleKind::Elementwise) {
      w.resize(nw);
      for (u64 i = 0; i < nw; i++) w[i] = ring_mul(u[i], v[i]);
    } else {
      w = ring_matmul(u, v, shape_x[0], shape_x[1], shape_y[1]);
    }
    std::vector<u64> u0(nx), v0(ny), w0(nw);
    for (u64 i = 0; i < nx; i++) u0[i] = ring_sub(u[i], u1[i]);
    for (u64 i = 0; i < ny; i++) v0[i] = ring_sub(v[i], v1[i]);
    for (u64 i = 0; i < nw; i++) w0[i] = ring_sub(w[i], w1[i]);
    Message m;
    m.msg_type = MsgType::TripleShare;
    m.tensor_id = tid_u;
    append_tensor_block(m.payload, shape_x, u0);
    append_tensor_block(m.payload, shape_y, v0);
    append_tensor_block(m.payload, shape_w, w0);
    eng.send_message(PartyId::P0, std::move(m), /*offline=*/true);
    triple.u = shape_only(eng, shape_x, tid_u);
    triple.v = shape_only(eng, shape_y, tid_v);
    triple.w = shape_only(eng, shape_w, tid_w);
  } else {
    Message m = eng.recv_message(PartyId::P2);
    if (m.msg_type != MsgType::TripleShare)
      throw ProtocolError("expected triple share");
    size_t pos = 0;
    TensorBlock bu = read_tensor_block(m.payload, pos);
    TensorBlock bv = read_tensor_block(m.payload, pos);
    TensorBlock bw = read_tensor_block(m.payload, pos);
    triple.u = SharedTensor(bu.shape, std::move(bu.elems), PartyId::P0, tid_u);
    triple.v = SharedTensor(bv.shape, std::move(bv.elems), PartyId::P0, tid_v);
    triple.w = SharedTensor(bw.shape, std::move(bw.elems), PartyId::P0, tid_w);
  }
  return triple;
}

// --- beaver multiplication -----------------------------------------------------

// Opens (x - u, y - v) both ways in one parallel round; returns the opened
// difference vectors on P0/P1.
static void open_masked_pair(PartyEngine& eng, const SharedTensor& x,
                             const SharedTensor& y, const BeaverTriple& t,
                             std::vector<u64>& d, std::vector<u64>& e) {
  if (eng.is(PartyId::P2)) return;
  size_t nx = x.vals().size(), ny = y.vals().size();
  std::vector<u64> dm(nx), em(ny);
  for (size_t i = 0; i < nx; i++) dm[i] = ring_sub(x.vals()[i], t.u.vals()[i]);
  for (size_t i = 0; i < ny; i++) em[i] = ring_sub(y.vals()[i], t.v.vals()[i]);
  Message m;
  m.msg_type = MsgType::OpenValue;
  m.tensor_id = x.tensor_id;
  append_tensor_block(m.payload, x.shape, dm);
  append_tensor_block(m.payload, y.shape, em);
  PartyId peer = eng.is(PartyId::P0) ? PartyId::P1 : PartyId::P0;
  eng.send_message(peer, std::move(m));
  Message r = eng.recv_message(peer);
  if (r.msg_type != MsgType::OpenValue)
    throw ProtocolError("expected opened masks");
  size_t pos = 0;
  TensorBlock bd = read_tensor_block(r.payload, pos);
  TensorBlock be = read_tensor_block(r.payload, pos);
  d.resize(nx);
  e.resize(ny);
  for (size_t i = 0; i < nx; i++) d[i] = ring_add(dm[i], bd.elems[i]);
  for (size_t i = 0; i < ny; i++) e[i] = ring_add(em[i], be.elems[i]);
}

SharedTensor mul_shared(PartyEngine& eng, const SharedTensor& x,
                        const SharedTensor& y) {
  check_same_shape(x, y, "mul");
  eng.materialize(x);
  eng.materialize(y);
  eng.begin_op("mul");
  BeaverTriple t =
      dealer_gen_triple(eng, x.shape, y.shape, TripleKind::Elementwise);
  u64 tid = eng.alloc_tensor_id();
  if (eng.is(PartyId::P2)) return shape_only(eng, x.shape, tid);
  std::vector<u64> d, e;
  open_masked_pair(eng, x, y, t, d, e);
  size_t n = d.size();
  std::vector<u64> z(n);
  for (size_t i = 0; i < n; i++) {
    u64 acc = ring_add(ring_mul(d[i], t.v.vals()[i]),
                       ring_mul(t.u.vals()[i], e[i]));
    acc = ring_add(acc, t.w.vals()[i]);
    if (eng.is(PartyId::P0)) acc = ring_add(acc, ring_mul(d[i], e[i]));
    z[i] = acc;
  }
  SharedTensor out(x.shape, std::move(z), eng.role(), tid);
  clip_and_truncate(eng, out);
  return out;
}

SharedTensor matmul_shared(PartyEngine& eng, const SharedTensor& x,
                           const SharedTensor& w) {
  if (x.shape.size() != 2 || w.shape.size() != 2 || x.shape[1] != w.shape[0])
    throw ShapeMismatchError("matmul: inner dims");
  eng.materialize(x);
  eng.materialize(w);
  eng.begin_op("matmul");
  BeaverTriple t = dealer_gen_triple(eng, x.shape, w.shape, TripleKind::MatMul);
  u64 tid = eng.alloc_tensor_id();
  std::vector<u64> out_shape = {x.shape[0], w.shape[1]};
  if (eng.is(PartyId::P2)) return shape_only(eng, std::move(out_shape), tid);
  std::vector<u64> d, e;
  open_masked_pair(eng, x, w, t, d, e);
  size_t b = x.shape[0], dd = x.shape[1], h = w.shape[1];
  // accumulate the full inner product at scale 2^2p, truncate once
  std::vector<u64> z = ring_matmul(d, t.v.vals(), b, dd, h);
  std::vector<u64> ue = ring_matmul(t.u.vals(), e, b, dd, h);
  for (size_t i = 0; i < z.size(); i++) {
    z[i] = ring_add(z[i], ue[i]);
    z[i] = ring_add(z[i], t.w.vals()[i]);
  }
  if (eng.is(PartyId::P0)) {
    std::vector<u64> de = ring_matmul(d, e, b, dd, h);
    for (size_t i = 0; i < z.size(); i++) z[i] = ring_add(z[i], de[i]);
  }
  SharedTensor out(out_shape, std::move(z), eng.role(), tid);
  clip_and_truncate(eng, out);
  return out;
}

// --- opening -----------------------------------------------------------------

static Message share_message(const SharedTensor& x) {
  Message m;
  m.msg_type = MsgType::OpenValue;
  m.tensor_id = x.tensor_id;
  append_tensor_block(m.payload, x.shape, x.vals());
  return m;
}

PlainFixedTensor open_to(PartyEngine& eng, const SharedTensor& x,
                         PartyId who) {
  eng.materialize(x);
  eng.begin_op("open");
  if (eng.role() == who) {
    if (who == PartyId::P2) {
      Message m0 = eng.recv_message(PartyId::P0);
      Message m1 = eng.recv_message(PartyId::P1);
      size_t p0 = 0, p1 = 0;
      TensorBlock b0 = read_tensor_block(m0.payload, p0);
      TensorBlock b1 = read_tensor_block(m1.payload, p1);
      if (b0.shape != b1.shape) throw ShapeMismatchError("open: shapes");
      if (m0.tensor_id != m1.tensor_id) throw IdMismatchError("open: ids");
      std::vector<u64> plain(b0.elems.size());
      for (size_t i = 0; i < plain.size(); i++)
        plain[i] = ring_add(b0.elems[i], b1.elems[i]);
      return PlainFixedTensor(b0.shape, std::move(plain));
    }
    PartyId peer = who == PartyId::P0 ? PartyId::P1 : PartyId::P0;
    Message m = eng.recv_message(peer);
    size_t pos = 0;
    TensorBlock tb = read_tensor_block(m.payload, pos);
    if (tb.shape != x.shape) throw ShapeMismatchError("open: shapes");
    if (m.tensor_id != x.tensor_id) throw IdMismatchError("open: ids");
    std::vector<u64> plain(tb.elems.size());
    for (size_t i = 0; i < plain.size(); i++)
      plain[i] = ring_add(tb.elems[i], x.vals()[i]);
    return PlainFixedTensor(x.shape, std::move(plain));
  }
  if (!eng.is(PartyId::P2)) eng.send_message(who, share_message(x));
  return PlainFixedTensor();
}

PlainFixedTensor open_mutual(PartyEngine& eng, const SharedTensor& x) {
  eng.materialize(x);
  eng.begin_op("open");
  if (eng.is(PartyId::P2)) return PlainFixedTensor();
  PartyId peer = eng.is(PartyId::P0) ? PartyId::P1 : PartyId::P0;
  eng.send_message(peer, share_message(x));
  Message m = eng.recv_message(peer);
  size_t pos = 0;
  TensorBlock tb = read_tensor_block(m.payload, pos);
  if (tb.shape != x.shape) throw ShapeMismatchError("open: shapes");
  if (m.tensor_id != x.tensor_id) throw IdMismatchError("open: ids");
  std::vector<u64> plain(tb.elems.size());
  for (size_t i = 0; i < plain.size(); i++)
    plain[i] = ring_add(tb.elems[i], x.vals()[i]);
  return PlainFixedTensor(x.shape, std::move(plain));
}

// --- compute-after-permutation --------------------------------------------------

SharedTensor cap(PartyEngine& eng, const SharedTensor& z, ElementwiseFn f,
                 bool flipping) {
  if (flipping && !flip_compatible(f))
    throw FlipIncompatibleError("cap: flipping needs sigmoid or tanh");
  eng.materialize(z);
  eng.begin_op("cap");
  u64 n = z.numel();
  u64 tid = eng.alloc_tensor_id();
  std::vector<u64> flat_shape = {n};

  if (eng.is(PartyId::P2)) {
    Message m0 = eng.recv_message(PartyId::P0);
    Message m1 = eng.recv_message(PartyId::P1);
    if (m0.msg_type != MsgType::PermutedShares ||
        m1.msg_type != MsgType::PermutedShares)
      throw ProtocolError("cap: expected permuted shares");
    size_t p0 = 0, p1 = 0;
    TensorBlock b0 = read_tensor_block(m0.payload, p0);
    TensorBlock b1 = read_tensor_block(m1.payload, p1);
    std::vector<u64> y(n);
    for (u64 i = 0; i < n; i++) {
      u64 zi = ring_add(b0.elems[i], b1.elems[i]);
      double zf = decode(zi, eng.fx());
      y[i] = encode(eval_elementwise(f, zf), eng.fx());
    }
    std::vector<u64> r = eng.prg_p1p2().next_u64s(n);
    for (u64 i = 0; i < n; i++) y[i] = ring_sub(y[i], r[i]);
    Message out;
    out.msg_type = MsgType::ReshareResult;
    out.tensor_id = tid;
    append_tensor_block(out.payload, flat_shape, y);
    eng.send_message(PartyId::P0, std::move(out));
    return shape_only(eng, z.shape, tid);
  }

  // P0/P1: mask first, then permutation, off the common stream.
  std::vector<u8> mask;
  if (flipping) mask = gen_mask(eng.prg_p0p1(), n);
  std::vector<u64> perm = gen_permutation(eng.prg_p0p1(), n);

  std::vector<u64> share = z.vals();  // row-major flatten
  if (flipping) {
    for (u64 i = 0; i < n; i++)
      if (mask[i]) share[i] = ring_neg(share[i]);
  }
  std::vector<u64> permuted(n);
  for (u64 i = 0; i < n; i++) permuted[i] = share[perm[i]];

  Message m;
  m.msg_type = MsgType::PermutedShares;
  m.tensor_id = tid;
  append_tensor_block(m.payload, flat_shape, permuted);
  eng.send_message(PartyId::P2, std::move(m));

  std::vector<u64> result(n);
  if (eng.is(PartyId::P1)) {
    // share arrives implicitly off the (P1,P2) stream
    std::vector<u64> r = eng.prg_p1p2().next_u64s(n);
    for (u64 i = 0; i < n; i++) result[perm[i]] = r[i];
  } else {
    Message rm = eng.recv_message(PartyId::P2);
    if (rm.msg_type != MsgType::ReshareResult)
      throw ProtocolError("cap: expected reshare");
    size_t pos = 0;
    TensorBlock tb = read_tensor_block(rm.payload, pos);
    for (u64 i = 0; i < n; i++) result[perm[i]] = tb.elems[i];
  }

  if (flipping) {
    u64 one = encode(1.0, eng.fx());
    for (u64 i = 0; i < n; i++) {
      if (!mask[i]) continue;
      if (f == ElementwiseFn::Sigmoid) {
        result[i] = eng.is(PartyId::P0) ? ring_sub(one, result[i])
                                        : ring_neg(result[i]);
      } else {  // tanh is odd
        result[i] = ring_neg(result[i]);
      }
    }
  }

  SharedTensor out(z.shape, std::move(result), eng.role(), tid);
  eng.note_final(out);
  return out;
}

}  // namespace ssperm
