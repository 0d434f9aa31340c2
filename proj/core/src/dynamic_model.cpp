// SPDX-License-Identifier: Apache-2.0
#include "stylerec/dynamic_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>

#include "binio.hpp"

namespace stylerec {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'D', 'Y', 'N', 'A', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

void fill_time(double* out, Minutes t, TimeEncoding enc) {
  const double years = static_cast<double>(t) / kMinutesPerYear;
  if (enc == TimeEncoding::raw_years) {
    out[0] = years;
    return;
  }
  const double frac = years - std::floor(years);
  const double angle = 2.0 * std::numbers::pi * frac;
  out[0] = years;
  out[1] = std::sin(angle);
  out[2] = std::cos(angle);
}

// Shared layout filler for the hot paths; x must be zeroed, length >= U.
void fill_step_input(double* x, const Vec* prev_dna, Minutes prev_t,
                     Minutes t_now, TimeEncoding enc, std::size_t dna_dim) {
  const std::size_t w = time_feature_width(enc);
  if (prev_dna) {
    fill_time(x, prev_t, enc);
    std::memcpy(x + w, prev_dna->data(), dna_dim * sizeof(double));
  }
  fill_time(x + w + dna_dim, t_now, enc);
}

template <typename Event>
void shuffle_groups(std::vector<Event>& events, Rng& rng) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].t < events[i - 1].t)
      throw PreconditionError("shuffle_orders: sequence not sorted by time");
  std::size_t start = 0;
  while (start < events.size()) {
    std::size_t end = start + 1;
    while (end < events.size() && events[end].t == events[start].t) ++end;
    // Fisher-Yates inside [start, end).
    for (std::size_t i = end - start - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      if (j != i) std::swap(events[start + i], events[start + j]);
    }
    start = end;
  }
}

}  // namespace

std::size_t time_feature_width(TimeEncoding enc) {
  return enc == TimeEncoding::annual_phase ? 3 : 1;
}

Vec encode_time(Minutes t, TimeEncoding enc) {
  Vec out(time_feature_width(enc), 0.0);
  fill_time(out.data(), t, enc);
  return out;
}

LstmParams init_lstm(std::size_t hidden, std::size_t embedding_dim,
                     TimeEncoding enc, Rng& rng) {
  LstmParams p;
  p.hidden = hidden;
  p.embedding_dim = embedding_dim;
  p.time_enc = enc;
  const std::size_t u = p.input_dim();
  p.w_gates = Mat(4 * hidden, u + hidden);
  p.b_gates.assign(4 * hidden, 0.0);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.b_gates[j] = 1.0;
  const double bound = std::sqrt(1.0 / static_cast<double>(u + hidden));
  for (auto& x : p.w_gates.data) x = rng.uniform(-bound, bound);
  p.w_proj = Mat(embedding_dim, hidden);
  p.b_proj.assign(embedding_dim, 0.0);
  const double pbound =
      std::sqrt(6.0 / static_cast<double>(hidden + embedding_dim));
  for (auto& x : p.w_proj.data) x = rng.uniform(-pbound, pbound);
  return p;
}

LstmState zero_state(const LstmParams& p) {
  return LstmState{Vec(p.hidden, 0.0), Vec(p.hidden, 0.0)};
}

Vec step_input(const std::optional<std::pair<Vec, Minutes>>& prev,
               Minutes t_now, TimeEncoding enc, std::size_t embedding_dim) {
  if (prev && prev->first.size() != embedding_dim)
    throw DimensionError("step_input: previous embedding has length " +
                         std::to_string(prev->first.size()) + ", expected " +
                         std::to_string(embedding_dim));
  Vec x(2 * time_feature_width(enc) + embedding_dim, 0.0);
  fill_step_input(x.data(), prev ? &prev->first : nullptr,
                  prev ? prev->second : 0, t_now, enc, embedding_dim);
  return x;
}

LstmState lstm_step(const LstmParams& p, const LstmState& state, const Vec& x) {
  const std::size_t h = p.hidden;
  const std::size_t u = p.input_dim();
  if (x.size() != u)
    throw DimensionError("lstm_step: input length " + std::to_string(x.size()) +
                         ", expected " + std::to_string(u));
  if (state.cell.size() != h || state.hidden.size() != h)
    throw DimensionError("lstm_step: state size mismatch");

  Vec a(u + h);
  std::copy(x.begin(), x.end(), a.begin());
  std::copy(state.hidden.begin(), state.hidden.end(), a.begin() + u);

  LstmState out{Vec(h), Vec(h)};
  for (std::size_t j = 0; j < h; ++j) {
    const double zi = dot(std::span(p.w_gates.row(j), u + h), std::span(a)) +
                      p.b_gates[j];
    const double zf =
        dot(std::span(p.w_gates.row(h + j), u + h), std::span(a)) +
        p.b_gates[h + j];
    const double zg =
        dot(std::span(p.w_gates.row(2 * h + j), u + h), std::span(a)) +
        p.b_gates[2 * h + j];
    const double zo =
        dot(std::span(p.w_gates.row(3 * h + j), u + h), std::span(a)) +
        p.b_gates[3 * h + j];
    const double ig = sigmoid(zi);
    const double fg = sigmoid(zf);
    const double gg = std::tanh(zg);
    const double og = sigmoid(zo);
    const double c = fg * state.cell[j] + ig * gg;
    out.cell[j] = c;
    out.hidden[j] = og * std::tanh(c);
  }
  return out;
}

std::vector<DynamicStyle> style_sequence(const LstmParams& p,
                                         const EmbeddedSequence& seq,
                                         std::optional<Minutes> eval_time) {
  const std::size_t d = p.embedding_dim;
  const std::size_t n = seq.events.size();
  if (eval_time && n > 0 && *eval_time < seq.events.back().t)
    throw PreconditionError("style_sequence: eval_time precedes last purchase");
  for (const auto& e : seq.events)
    if (e.dna.size() != d)
      throw DimensionError("style_sequence: embedding size mismatch for '" +
                           e.article + "'");

  std::vector<DynamicStyle> out;
  out.reserve(n + (eval_time ? 1 : 0));
  LstmState st = zero_state(p);
  Vec x(p.input_dim());
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(x.begin(), x.end(), 0.0);
    fill_step_input(x.data(), i > 0 ? &seq.events[i - 1].dna : nullptr,
                    i > 0 ? seq.events[i - 1].t : 0, seq.events[i].t,
                    p.time_enc, d);
    st = lstm_step(p, st, x);
    out.push_back(DynamicStyle{affine(p.w_proj, p.b_proj, st.hidden), i + 1,
                               seq.customer});
  }
  if (eval_time) {
    std::fill(x.begin(), x.end(), 0.0);
    fill_step_input(x.data(), n > 0 ? &seq.events[n - 1].dna : nullptr,
                    n > 0 ? seq.events[n - 1].t : 0, *eval_time, p.time_enc, d);
    st = lstm_step(p, st, x);
    out.push_back(DynamicStyle{affine(p.w_proj, p.b_proj, st.hidden), n + 1,
                               seq.customer});
  }
  return out;
}

EmbeddedSequence embed_sequence(const PurchaseSequence& seq,
                                const Catalog& catalog,
                                const std::vector<Vec>& dna_by_index) {
  EmbeddedSequence out;
  out.customer = seq.customer;
  out.events.reserve(seq.events.size());
  for (const auto& e : seq.events) {
    const int idx = catalog.index_of(e.article);
    if (idx < 0)
      throw PreconditionError("embed_sequence: unknown article '" + e.article +
                              "'");
    out.events.push_back(
        EmbeddedEvent{e.article, e.t, dna_by_index[static_cast<std::size_t>(idx)]});
  }
  return out;
}

PurchaseSequence shuffle_orders(const PurchaseSequence& seq, Rng& rng) {
  PurchaseSequence out = seq;
  shuffle_groups(out.events, rng);
  return out;
}

void shuffle_orders_embedded(EmbeddedSequence& seq, Rng& rng) {
  shuffle_groups(seq.events, rng);
}

std::vector<bool> order_mask(const std::vector<Minutes>& timestamps) {
  std::vector<bool> mask(timestamps.size(), false);
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (i > 0 && timestamps[i] < timestamps[i - 1])
      throw PreconditionError("order_mask: timestamps not sorted");
    mask[i] = i == 0 || timestamps[i] != timestamps[i - 1];
  }
  return mask;
}

std::vector<std::size_t> sample_negative_indices(
    const Catalog& catalog, Minutes t,
    const std::unordered_set<std::size_t>& exclude, std::size_t n, Rng& rng,
    bool ignore_availability) {
  if (n == 0) return {};
  const std::size_t a_count = catalog.size();
  if (a_count == 0)
    throw SamplingError("sample_negatives: empty catalog");

  std::vector<std::size_t> picked;
  picked.reserve(n);
  std::unordered_set<std::size_t> chosen;
  const std::size_t cap = std::max<std::size_t>(64, 20 * n);
  std::size_t attempts = 0;
  while (picked.size() < n && attempts < cap) {
    ++attempts;
    const std::size_t i = static_cast<std::size_t>(rng.below(a_count));
    if (chosen.count(i) || exclude.count(i)) continue;
    if (!ignore_availability && !catalog.articles[i].available_at(t)) continue;
    chosen.insert(i);
    picked.push_back(i);
  }
  if (picked.size() == n) return picked;

  // Rejection stalled; enumerate the remaining pool and finish exactly.
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < a_count; ++i) {
    if (chosen.count(i) || exclude.count(i)) continue;
    if (!ignore_availability && !catalog.articles[i].available_at(t)) continue;
    pool.push_back(i);
  }
  if (picked.size() + pool.size() < n)
    throw SamplingError("sample_negatives: pool of " +
                        std::to_string(picked.size() + pool.size()) +
                        " smaller than n=" + std::to_string(n) + " at t=" +
                        std::to_string(t));
  for (std::size_t k = 0; picked.size() < n; ++k) {
    const std::size_t j =
        k + static_cast<std::size_t>(rng.below(pool.size() - k));
    std::swap(pool[k], pool[j]);
    picked.push_back(pool[k]);
  }
  return picked;
}

std::vector<std::string> sample_negatives(
    const Catalog& catalog, Minutes t,
    const std::unordered_set<std::string>& exclude, std::size_t n, Rng& rng) {
  std::unordered_set<std::size_t> exclude_idx;
  exclude_idx.reserve(exclude.size());
  for (const auto& id : exclude) {
    const int idx = catalog.index_of(id);
    if (idx >= 0) exclude_idx.insert(static_cast<std::size_t>(idx));
  }
  const auto picked =
      sample_negative_indices(catalog, t, exclude_idx, n, rng, false);
  std::vector<std::string> ids;
  ids.reserve(picked.size());
  for (const auto i : picked) ids.push_back(catalog.articles[i].id);
  return ids;
}

namespace {

// Scores and d-gradient factors shared by the loss value and gradient paths.
struct LossEval {
  double loss = 0.0;
  double dpos = 0.0;       // dL / d(pos score)
  std::vector<double> dneg;  // dL / d(neg score j)
};

LossEval eval_loss(LossKind kind, double pos, const std::vector<double>& negs) {
  LossEval ev;
  const std::size_t n = negs.size();
  ev.dneg.assign(n, 0.0);
  switch (kind) {
    case LossKind::sigmoid: {
      // -log sig(pos) - sum_j log sig(-neg_j)
      ev.loss = -std::log(std::max(1e-300, sigmoid(pos)));
      ev.dpos = sigmoid(pos) - 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        ev.loss += -std::log(std::max(1e-300, sigmoid(-negs[j])));
        ev.dneg[j] = sigmoid(negs[j]);
      }
      break;
    }
    case LossKind::softmax: {
      double m = pos;
      for (const double s : negs) m = std::max(m, s);
      const double e0 = std::exp(pos - m);
      double z = e0;
      for (const double s : negs) z += std::exp(s - m);
      ev.loss = -(pos - m) + std::log(z);
      ev.dpos = e0 / z - 1.0;
      for (std::size_t j = 0; j < n; ++j) ev.dneg[j] = std::exp(negs[j] - m) / z;
      break;
    }
    case LossKind::rank: {
      // mean_j sig(neg_j - pos)
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double u = sigmoid(negs[j] - pos);
        ev.loss += inv * u;
        const double du = inv * u * (1.0 - u);
        ev.dneg[j] = du;
        ev.dpos -= du;
      }
      break;
    }
  }
  return ev;
}

LossEval score_and_eval(LossKind kind, const Vec& d, const Vec& f_pos,
                        const std::vector<const Vec*>& negs) {
  if (negs.empty())
    throw PreconditionError("sequence_loss: needs at least one negative");
  const double pos = dot(f_pos, d);
  std::vector<double> neg_scores(negs.size());
  for (std::size_t j = 0; j < negs.size(); ++j) neg_scores[j] = dot(*negs[j], d);
  return eval_loss(kind, pos, neg_scores);
}

}  // namespace

double sequence_loss(LossKind kind, const Vec& d, const Vec& f_pos,
                     const std::vector<const Vec*>& negs) {
  return score_and_eval(kind, d, f_pos, negs).loss;
}

double sequence_loss(LossKind kind, const Vec& d, const Vec& f_pos,
                     const std::vector<Vec>& negs) {
  std::vector<const Vec*> ptrs;
  ptrs.reserve(negs.size());
  for (const auto& v : negs) ptrs.push_back(&v);
  return sequence_loss(kind, d, f_pos, ptrs);
}

Vec sequence_loss_grad(LossKind kind, const Vec& d, const Vec& f_pos,
                       const std::vector<const Vec*>& negs, double* loss_out) {
  const LossEval ev = score_and_eval(kind, d, f_pos, negs);
  Vec grad(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) grad[i] = ev.dpos * f_pos[i];
  for (std::size_t j = 0; j < negs.size(); ++j) {
    const double gj = ev.dneg[j];
    const Vec& f = *negs[j];
    for (std::size_t i = 0; i < d.size(); ++i) grad[i] += gj * f[i];
  }
  if (loss_out) *loss_out = ev.loss;
  return grad;
}

LstmGrads bptt_gradients(const LstmParams& p,
                         const std::vector<MaskedSequence>& batch,
                         LossKind kind, double* mean_loss_out) {
  const std::size_t h = p.hidden;
  const std::size_t d = p.embedding_dim;
  const std::size_t u = p.input_dim();
  const std::size_t uh = u + h;

  LstmGrads g;
  g.w_gates = Mat(4 * h, uh);
  g.b_gates.assign(4 * h, 0.0);
  g.w_proj = Mat(d, h);
  g.b_proj.assign(d, 0.0);

  std::size_t masked_total = 0;
  for (const auto& ms : batch)
    for (const bool m : ms.mask) masked_total += m ? 1 : 0;
  if (masked_total == 0) {
    if (mean_loss_out) *mean_loss_out = 0.0;
    return g;
  }
  const double scale = 1.0 / static_cast<double>(masked_total);
  double total_loss = 0.0;

  for (const auto& ms : batch) {
    const auto& ev = ms.seq.events;
    const std::size_t n = ev.size();
    if (ms.mask.size() != n || ms.negatives.size() != n)
      throw DimensionError("bptt_gradients: mask/negatives length mismatch");

    std::vector<Vec> a_cat(n), ig(n), fg(n), gg(n), og(n), cell(n), tanhc(n),
        hidden(n), gd(n);
    Vec h_prev(h, 0.0), c_prev(h, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
      Vec a(uh, 0.0);
      fill_step_input(a.data(), i > 0 ? &ev[i - 1].dna : nullptr,
                      i > 0 ? ev[i - 1].t : 0, ev[i].t, p.time_enc, d);
      std::copy(h_prev.begin(), h_prev.end(), a.begin() + u);

      ig[i].resize(h);
      fg[i].resize(h);
      gg[i].resize(h);
      og[i].resize(h);
      cell[i].resize(h);
      tanhc[i].resize(h);
      hidden[i].resize(h);
      for (std::size_t j = 0; j < h; ++j) {
        const auto gate = [&](std::size_t block) {
          const double* wr = p.w_gates.row(block * h + j);
          double acc = p.b_gates[block * h + j];
          for (std::size_t c = 0; c < uh; ++c) acc += wr[c] * a[c];
          return acc;
        };
        const double vi = sigmoid(gate(0));
        const double vf = sigmoid(gate(1));
        const double vg = std::tanh(gate(2));
        const double vo = sigmoid(gate(3));
        const double vc = vf * c_prev[j] + vi * vg;
        ig[i][j] = vi;
        fg[i][j] = vf;
        gg[i][j] = vg;
        og[i][j] = vo;
        cell[i][j] = vc;
        tanhc[i][j] = std::tanh(vc);
        hidden[i][j] = vo * tanhc[i][j];
      }
      a_cat[i] = std::move(a);
      h_prev = hidden[i];
      c_prev = cell[i];

      if (ms.mask[i]) {
        const Vec style = affine(p.w_proj, p.b_proj, hidden[i]);
        double step_loss = 0.0;
        gd[i] = sequence_loss_grad(kind, style, ev[i].dna, ms.negatives[i],
                                   &step_loss);
        if (!std::isfinite(step_loss))
          throw NumericalError("bptt_gradients: non-finite loss at step " +
                               std::to_string(i + 1) + " of customer '" +
                               ms.seq.customer + "'");
        total_loss += scale * step_loss;
        for (auto& x : gd[i]) x *= scale;
      }
    }

    Vec dh_next(h, 0.0), dc_next(h, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      Vec dh = dh_next;
      if (!gd[i].empty()) {
        for (std::size_t r = 0; r < d; ++r) {
          const double gr = gd[i][r];
          g.b_proj[r] += gr;
          if (gr == 0.0) continue;
          const double* wr = p.w_proj.row(r);
          double* gwr = g.w_proj.row(r);
          for (std::size_t j = 0; j < h; ++j) {
            gwr[j] += gr * hidden[i][j];
            dh[j] += gr * wr[j];
          }
        }
      }

      Vec dz(4 * h);
      for (std::size_t j = 0; j < h; ++j) {
        const double cp = i == 0 ? 0.0 : cell[i - 1][j];
        const double dout = dh[j] * tanhc[i][j];
        const double dtc = dh[j] * og[i][j];
        const double dc = dc_next[j] + dtc * (1.0 - tanhc[i][j] * tanhc[i][j]);
        const double dig = dc * gg[i][j];
        const double dgg = dc * ig[i][j];
        const double dfg = dc * cp;
        dz[j] = dig * ig[i][j] * (1.0 - ig[i][j]);
        dz[h + j] = dfg * fg[i][j] * (1.0 - fg[i][j]);
        dz[2 * h + j] = dgg * (1.0 - gg[i][j] * gg[i][j]);
        dz[3 * h + j] = dout * og[i][j] * (1.0 - og[i][j]);
        dc_next[j] = dc * fg[i][j];
      }

      Vec dh_prev(h, 0.0);
      const double* a = a_cat[i].data();
      for (std::size_t r = 0; r < 4 * h; ++r) {
        const double zr = dz[r];
        g.b_gates[r] += zr;
        if (zr == 0.0) continue;
        double* gwr = g.w_gates.row(r);
        for (std::size_t c = 0; c < uh; ++c) gwr[c] += zr * a[c];
        const double* wr = p.w_gates.row(r);
        for (std::size_t j = 0; j < h; ++j) dh_prev[j] += zr * wr[u + j];
      }
      dh_next = std::move(dh_prev);
    }
  }

  if (mean_loss_out) *mean_loss_out = total_loss;
  return g;
}

namespace {

// Forward-only mean masked loss; used for validation tracking.
double masked_loss(const LstmParams& p, const std::vector<MaskedSequence>& batch,
                   LossKind kind) {
  std::size_t masked_total = 0;
  double total = 0.0;
  for (const auto& ms : batch) {
    const auto styles = style_sequence(p, ms.seq);
    for (std::size_t i = 0; i < styles.size(); ++i) {
      if (!ms.mask[i]) continue;
      total += sequence_loss(kind, styles[i].d, ms.seq.events[i].dna,
                             ms.negatives[i]);
      ++masked_total;
    }
  }
  return masked_total == 0 ? 0.0 : total / static_cast<double>(masked_total);
}

MaskedSequence prepare_sequence(const EmbeddedSequence& base, const Catalog& catalog,
                                const std::vector<Vec>& dna_by_index,
                                std::size_t n_negatives, Rng& rng,
                                std::size_t* fallbacks) {
  MaskedSequence ms;
  ms.seq = base;
  shuffle_orders_embedded(ms.seq, rng);
  std::vector<Minutes> ts;
  ts.reserve(ms.seq.events.size());
  for (const auto& e : ms.seq.events) ts.push_back(e.t);
  ms.mask = order_mask(ts);
  ms.negatives.resize(ms.seq.events.size());

  std::size_t group_start = 0;
  while (group_start < ms.seq.events.size()) {
    std::size_t group_end = group_start + 1;
    while (group_end < ms.seq.events.size() &&
           ms.seq.events[group_end].t == ms.seq.events[group_start].t)
      ++group_end;
    // The positive and everything bought at the same minute are excluded.
    std::unordered_set<std::size_t> exclude;
    for (std::size_t i = group_start; i < group_end; ++i) {
      const int idx = catalog.index_of(ms.seq.events[i].article);
      if (idx >= 0) exclude.insert(static_cast<std::size_t>(idx));
    }
    const Minutes t = ms.seq.events[group_start].t;
    std::vector<std::size_t> negs;
    try {
      negs = sample_negative_indices(catalog, t, exclude, n_negatives, rng, false);
    } catch (const SamplingError&) {
      negs = sample_negative_indices(catalog, t, exclude, n_negatives, rng, true);
      if (fallbacks) ++(*fallbacks);
    }
    auto& slot = ms.negatives[group_start];
    slot.reserve(negs.size());
    for (const auto idx : negs) slot.push_back(&dna_by_index[idx]);
    group_start = group_end;
  }
  return ms;
}

}  // namespace

DynTrainResult train_dynamic(const Catalog& catalog,
                             const std::vector<PurchaseSequence>& train_seqs,
                             const std::vector<Vec>& dna_by_index,
                             const TrainConfigDyn& cfg, std::ostream* log) {
  if (cfg.negatives == 0)
    throw PreconditionError("train_dynamic: negatives must be >= 1");
  if (dna_by_index.size() != catalog.size())
    throw DimensionError("train_dynamic: one embedding per catalog article required");
  if (dna_by_index.empty())
    throw PreconditionError("train_dynamic: empty catalog");
  const std::size_t dna_dim = dna_by_index.front().size();

  Rng root(cfg.seed);
  Rng init_rng = root.fork(stable_hash("dyn-init"));
  DynTrainResult result;
  result.params = init_lstm(cfg.hidden, dna_dim, cfg.time_enc, init_rng);

  std::vector<EmbeddedSequence> base;
  base.reserve(train_seqs.size());
  for (const auto& seq : train_seqs)
    if (!seq.events.empty())
      base.push_back(embed_sequence(seq, catalog, dna_by_index));

  // Fixed validation set: every 8th sequence, prepared once so the same
  // shuffles and negatives are scored after every epoch.
  std::vector<MaskedSequence> val_batch;
  {
    Rng val_rng = root.fork(stable_hash("dyn-val"));
    for (std::size_t i = 0; i < base.size(); i += 8)
      val_batch.push_back(prepare_sequence(base[i], catalog, dna_by_index,
                                           cfg.negatives, val_rng, nullptr));
  }
  result.val_loss.push_back(masked_loss(result.params, val_batch, LossKind::rank));

  // Batches group sequences of similar length so each batch's work is even.
  std::vector<std::size_t> by_length(base.size());
  std::iota(by_length.begin(), by_length.end(), std::size_t{0});
  std::sort(by_length.begin(), by_length.end(), [&](std::size_t a, std::size_t b) {
    if (base[a].events.size() != base[b].events.size())
      return base[a].events.size() > base[b].events.size();
    return base[a].customer < base[b].customer;
  });
  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch_sequences);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < by_length.size(); start += batch_size)
    batches.emplace_back(
        by_length.begin() + start,
        by_length.begin() + std::min(by_length.size(), start + batch_size));

  AdamState wg_state, bg_state, wp_state, bp_state;
  auto& params = result.params;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng =
        root.fork(stable_hash("dyn-epoch") ^ (0x9e3779b97f4a7c15ULL * (epoch + 1)));
    std::vector<std::size_t> batch_order(batches.size());
    std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
    epoch_rng.shuffle(batch_order);

    double epoch_loss = 0.0;
    std::size_t batch_count = 0;
    for (const auto bi : batch_order) {
      std::vector<MaskedSequence> prepared;
      prepared.reserve(batches[bi].size());
      for (const auto si : batches[bi]) {
        // Per-sequence stream: independent of batch scheduling.
        Rng seq_rng = root.fork(stable_hash(base[si].customer) ^
                                (0xd1342543de82ef95ULL * (epoch + 1)));
        prepared.push_back(prepare_sequence(base[si], catalog, dna_by_index,
                                            cfg.negatives, seq_rng,
                                            &result.negative_fallbacks));
      }
      double batch_loss = 0.0;
      LstmGrads grads = bptt_gradients(params, prepared, cfg.kind, &batch_loss);
      if (!std::isfinite(batch_loss))
        throw NumericalError("train_dynamic: non-finite loss at epoch " +
                             std::to_string(epoch + 1));
      epoch_loss += batch_loss;
      ++batch_count;

      if (cfg.clip_norm > 0.0) {
        const double norm = global_norm({std::span<const double>(grads.w_gates.data),
                                         std::span<const double>(grads.b_gates),
                                         std::span<const double>(grads.w_proj.data),
                                         std::span<const double>(grads.b_proj)});
        if (norm > cfg.clip_norm) {
          const double s = cfg.clip_norm / norm;
          for (auto& x : grads.w_gates.data) x *= s;
          for (auto& x : grads.b_gates) x *= s;
          for (auto& x : grads.w_proj.data) x *= s;
          for (auto& x : grads.b_proj) x *= s;
        }
      }
      adam_step(params.w_gates.data, grads.w_gates.data, wg_state, cfg.adam);
      adam_step(params.b_gates, grads.b_gates, bg_state, cfg.adam);
      adam_step(params.w_proj.data, grads.w_proj.data, wp_state, cfg.adam);
      adam_step(params.b_proj, grads.b_proj, bp_state, cfg.adam);
    }

    result.train_loss.push_back(
        batch_count == 0 ? 0.0 : epoch_loss / static_cast<double>(batch_count));
    result.val_loss.push_back(masked_loss(params, val_batch, LossKind::rank));
    if (log)
      *log << "train-dynamic epoch " << (epoch + 1) << " train "
           << result.train_loss.back() << " val " << result.val_loss.back()
           << "\n";
  }
  return result;
}

void save_dynamic_checkpoint(const LstmParams& params,
                             const DynCheckpointMeta& meta,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  binio::write_bytes(out, kMagic, sizeof(kMagic));
  binio::write_u32(out, kVersion);
  binio::write_string(out, std::string(Rng::kAlgorithm));
  binio::write_u64(out, meta.seed);
  binio::write_u32(out, static_cast<std::uint32_t>(params.input_dim()));
  binio::write_u32(out, static_cast<std::uint32_t>(params.hidden));
  binio::write_u32(out, static_cast<std::uint32_t>(params.embedding_dim));
  binio::write_u8(out, static_cast<std::uint8_t>(params.time_enc));
  binio::write_u8(out, static_cast<std::uint8_t>(meta.kind));
  binio::write_u32(out, static_cast<std::uint32_t>(meta.negatives));
  binio::write_f64_block(out, params.w_gates.data);
  binio::write_f64_block(out, params.b_gates);
  binio::write_f64_block(out, params.w_proj.data);
  binio::write_f64_block(out, params.b_proj);
  if (!out) throw Error("write failed for '" + path + "'");
}

LstmParams load_dynamic_checkpoint(const std::string& path,
                                   DynCheckpointMeta* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  char magic[8];
  binio::read_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": not a dynamic checkpoint");
  const auto version = binio::read_u32(in, "version");
  if (version != kVersion)
    throw ParseError(path + ": unsupported version " + std::to_string(version));
  const std::string rng_id = binio::read_string(in, "rng id");
  if (rng_id != Rng::kAlgorithm)
    throw ParseError(path + ": unknown rng id '" + rng_id + "'");
  DynCheckpointMeta meta;
  meta.seed = binio::read_u64(in, "seed");
  const std::uint32_t u = binio::read_u32(in, "input dim");
  const std::uint32_t h = binio::read_u32(in, "hidden");
  const std::uint32_t d = binio::read_u32(in, "embedding dim");
  LstmParams p;
  p.hidden = h;
  p.embedding_dim = d;
  p.time_enc = static_cast<TimeEncoding>(binio::read_u8(in, "time encoding"));
  meta.kind = static_cast<LossKind>(binio::read_u8(in, "loss kind"));
  meta.negatives = binio::read_u32(in, "negatives");
  if (p.input_dim() != u)
    throw ParseError(path + ": inconsistent input dim");
  p.w_gates = Mat(4 * h, u + h);
  binio::read_f64_block(in, p.w_gates.data, p.w_gates.size(), "gate weights");
  binio::read_f64_block(in, p.b_gates, 4 * h, "gate biases");
  p.w_proj = Mat(d, h);
  binio::read_f64_block(in, p.w_proj.data, p.w_proj.size(), "projection");
  binio::read_f64_block(in, p.b_proj, d, "projection bias");
  if (meta_out) *meta_out = meta;
  return p;
}

}  // namespace stylerec
