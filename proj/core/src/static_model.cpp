// SPDX-License-Identifier: Apache-2.0
#include "stylerec/static_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binio.hpp"
#include "stylerec/ranking.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'S', 'T', 'A', 'T', 'C', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr double kProbClamp = 1e-12;

double clamped_ce(double p, bool purchased) {
  p = std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
  return purchased ? -std::log(p) : -std::log1p(-p);
}

double apply_act(Activation act, double z) {
  return act == Activation::rectifier ? (z > 0.0 ? z : 0.0) : z;
}

struct ForwardCache {
  std::vector<Vec> pre;   // z per layer
  std::vector<Vec> post;  // act(z) per layer
};

Vec forward(const EncoderParams& enc, const Vec& x, ForwardCache* cache) {
  Vec a = x;
  for (const auto& layer : enc.layers) {
    Vec z = affine(layer.w, layer.b, a);
    Vec out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = apply_act(layer.act, z[i]);
    if (cache) {
      cache->pre.push_back(z);
      cache->post.push_back(out);
    }
    a = std::move(out);
  }
  return a;
}

}  // namespace

std::size_t EncoderParams::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

int StaticModel::customer_index(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

void StaticModel::rebuild_index() {
  index_.clear();
  index_.reserve(customer_ids.size());
  for (std::size_t i = 0; i < customer_ids.size(); ++i)
    index_[customer_ids[i]] = i;
}

std::size_t StaticModel::param_count() const {
  std::size_t n = encoder.param_count();
  for (const auto& p : profiles) n += p.s.size() + 1;
  return n;
}

Vec encode_article(const EncoderParams& enc, const Vec& features) {
  if (enc.layers.empty()) throw DimensionError("encode_article: empty encoder");
  if (features.size() != enc.input_dim())
    throw DimensionError("encode_article: feature length " +
                         std::to_string(features.size()) + ", encoder expects " +
                         std::to_string(enc.input_dim()));
  return forward(enc, features, nullptr);
}

std::vector<Vec> encode_catalog(const EncoderParams& enc,
                                const Catalog& catalog, const Schema& schema) {
  std::vector<Vec> dna;
  dna.reserve(catalog.size());
  for (const auto& a : catalog.articles)
    dna.push_back(encode_article(enc, feature_vector(a, schema)));
  return dna;
}

double purchase_prob(const Vec& f, const StaticCustomerProfile& prof) {
  return sigmoid(dot(f, prof.s) + prof.beta);
}

double static_loss(const PurchaseMatrix& pm,
                   const std::vector<std::size_t>& article_batch,
                   const std::vector<Vec>& batch_dna,
                   const std::vector<StaticCustomerProfile>& profiles) {
  if (article_batch.size() != batch_dna.size())
    throw DimensionError("static_loss: batch/dna size mismatch");
  if (article_batch.empty() || profiles.empty()) return 0.0;
  const std::size_t k_count = profiles.size();
  double total = 0.0;
  for (std::size_t bi = 0; bi < article_batch.size(); ++bi) {
    const auto& buyers = pm.buyers[article_batch[bi]];
    const Vec& f = batch_dna[bi];
    std::size_t next_buyer = 0;
    double article_loss = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
      while (next_buyer < buyers.size() && buyers[next_buyer] < k) ++next_buyer;
      const bool purchased = next_buyer < buyers.size() && buyers[next_buyer] == k;
      article_loss += clamped_ce(purchase_prob(f, profiles[k]), purchased);
    }
    total += article_loss / static_cast<double>(k_count);
  }
  return total / static_cast<double>(article_batch.size());
}

StaticGrads static_loss_gradients(const EncoderParams& enc,
                                  const std::vector<Vec>& batch_features,
                                  const std::vector<std::size_t>& article_batch,
                                  const PurchaseMatrix& pm,
                                  const std::vector<StaticCustomerProfile>& profiles,
                                  double* loss_out) {
  if (batch_features.size() != article_batch.size())
    throw DimensionError("static_loss_gradients: batch size mismatch");
  const std::size_t k_count = profiles.size();
  const std::size_t d = enc.output_dim();

  StaticGrads g;
  g.w.reserve(enc.layers.size());
  g.b.reserve(enc.layers.size());
  for (const auto& l : enc.layers) {
    g.w.emplace_back(l.w.rows, l.w.cols);
    g.b.emplace_back(l.b.size(), 0.0);
  }
  g.s = Mat(k_count, d);
  g.beta.assign(k_count, 0.0);

  const double scale =
      1.0 / (static_cast<double>(article_batch.size()) * static_cast<double>(k_count));
  double loss = 0.0;

  for (std::size_t bi = 0; bi < article_batch.size(); ++bi) {
    ForwardCache cache;
    const Vec f = forward(enc, batch_features[bi], &cache);
    const auto& buyers = pm.buyers[article_batch[bi]];
    std::size_t next_buyer = 0;
    Vec df(d, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
      while (next_buyer < buyers.size() && buyers[next_buyer] < k) ++next_buyer;
      const bool purchased = next_buyer < buyers.size() && buyers[next_buyer] == k;
      const auto& prof = profiles[k];
      const double p = purchase_prob(f, prof);
      loss += scale * clamped_ce(p, purchased);
      const double dy = scale * (p - (purchased ? 1.0 : 0.0));
      g.beta[k] += dy;
      double* gs = g.s.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        gs[j] += dy * f[j];
        df[j] += dy * prof.s[j];
      }
    }
    // Backprop df through the encoder stack.
    Vec delta = std::move(df);
    for (std::size_t li = enc.layers.size(); li-- > 0;) {
      const auto& layer = enc.layers[li];
      const Vec& z = cache.pre[li];
      if (layer.act == Activation::rectifier)
        for (std::size_t i = 0; i < delta.size(); ++i)
          if (z[i] <= 0.0) delta[i] = 0.0;
      const Vec& below = li == 0 ? batch_features[bi] : cache.post[li - 1];
      Mat& gw = g.w[li];
      for (std::size_t r = 0; r < layer.w.rows; ++r) {
        const double dr = delta[r];
        if (dr == 0.0) continue;
        double* gwr = gw.row(r);
        for (std::size_t c = 0; c < layer.w.cols; ++c) gwr[c] += dr * below[c];
      }
      for (std::size_t r = 0; r < layer.b.size(); ++r) g.b[li][r] += delta[r];
      if (li > 0) {
        Vec lower(layer.w.cols, 0.0);
        for (std::size_t r = 0; r < layer.w.rows; ++r) {
          const double dr = delta[r];
          if (dr == 0.0) continue;
          const double* wr = layer.w.row(r);
          for (std::size_t c = 0; c < layer.w.cols; ++c) lower[c] += dr * wr[c];
        }
        delta = std::move(lower);
      }
    }
  }
  if (loss_out) *loss_out = loss;
  return g;
}

namespace {

EncoderParams init_encoder(std::size_t input_dim, std::size_t hidden,
                           std::size_t out_dim, Rng& rng) {
  const auto glorot = [&](Mat& w) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (auto& x : w.data) x = rng.uniform(-bound, bound);
  };
  EncoderParams enc;
  EncoderLayer h;
  h.w = Mat(hidden, input_dim);
  h.b.assign(hidden, 0.0);
  h.act = Activation::rectifier;
  glorot(h.w);
  enc.layers.push_back(std::move(h));
  EncoderLayer top;
  top.w = Mat(out_dim, hidden);
  top.b.assign(out_dim, 0.0);
  top.act = Activation::identity;
  glorot(top.w);
  enc.layers.push_back(std::move(top));
  return enc;
}

}  // namespace

StaticTrainResult train_static(const Catalog& catalog, const Schema& schema,
                               const PurchaseMatrix& pm,
                               const StaticTrainConfig& cfg,
                               std::ostream* log) {
  const std::size_t a_count = pm.articles.size();
  const std::size_t k_count = pm.customers.size();
  if (a_count == 0 || k_count == 0)
    throw PreconditionError("train_static: empty purchase matrix");

  Rng rng = Rng(cfg.seed);
  Rng init_rng = rng.fork(stable_hash("static-init"));

  // Features in pm.articles order.
  std::vector<Vec> features;
  features.reserve(a_count);
  for (const auto& id : pm.articles) {
    const Article* art = catalog.find(id);
    if (!art) throw PreconditionError("train_static: article '" + id +
                                      "' not in catalog");
    features.push_back(feature_vector(*art, schema));
  }

  StaticModel model;
  model.encoder = init_encoder(schema.feature_dim(), cfg.hidden,
                               cfg.embedding_dim, init_rng);
  model.customer_ids = pm.customers;
  model.profiles.resize(k_count);

  // Per-customer purchase counts give the bias its moment-matching start.
  std::vector<std::size_t> bought_count(k_count, 0);
  for (const auto& buyers : pm.buyers)
    for (const auto k : buyers) bought_count[k] += 1;
  for (std::size_t k = 0; k < k_count; ++k) {
    auto& prof = model.profiles[k];
    prof.s.resize(cfg.embedding_dim);
    for (auto& x : prof.s) x = 0.01 * init_rng.gaussian();
    const double rate = std::min(
        1.0 - 1e-9, std::max(1e-9, static_cast<double>(bought_count[k]) /
                                        static_cast<double>(a_count)));
    prof.beta = std::clamp(std::log(rate / (1.0 - rate)), -6.0, 6.0);
  }
  model.rebuild_index();

  // Fixed validation slice: every 8th article.
  std::vector<std::size_t> val_slice;
  for (std::size_t i = 0; i < a_count; i += 8) val_slice.push_back(i);
  const auto val_dna = [&]() {
    std::vector<Vec> dna;
    dna.reserve(val_slice.size());
    for (const auto i : val_slice)
      dna.push_back(encode_article(model.encoder, features[i]));
    return dna;
  };

  StaticTrainResult result;
  result.val_loss.push_back(static_loss(pm, val_slice, val_dna(), model.profiles));

  std::vector<AdamState> w_state(model.encoder.layers.size());
  std::vector<AdamState> b_state(model.encoder.layers.size());
  AdamState s_state, beta_state;
  // Flat view of all customer styles for one Adam tensor.
  Mat s_flat(k_count, cfg.embedding_dim);
  Vec beta_flat(k_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k) {
    std::copy(model.profiles[k].s.begin(), model.profiles[k].s.end(),
              s_flat.row(k));
    beta_flat[k] = model.profiles[k].beta;
  }
  const auto sync_profiles = [&]() {
    for (std::size_t k = 0; k < k_count; ++k) {
      std::copy(s_flat.row(k), s_flat.row(k) + cfg.embedding_dim,
                model.profiles[k].s.begin());
      model.profiles[k].beta = beta_flat[k];
    }
  };

  std::vector<std::size_t> order(a_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng = rng.fork(stable_hash("static-order"));

  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch_articles);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < a_count; start += batch_size) {
      const std::size_t end = std::min(a_count, start + batch_size);
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
      std::vector<Vec> batch_features;
      batch_features.reserve(batch.size());
      for (const auto i : batch) batch_features.push_back(features[i]);

      double batch_loss = 0.0;
      StaticGrads grads = static_loss_gradients(
          model.encoder, batch_features, batch, pm, model.profiles, &batch_loss);
      if (!std::isfinite(batch_loss))
        throw NumericalError("train_static: non-finite loss at epoch " +
                             std::to_string(epoch + 1) + ", batch " +
                             std::to_string(batches + 1));
      epoch_loss += batch_loss;
      ++batches;

      for (std::size_t li = 0; li < model.encoder.layers.size(); ++li) {
        adam_step(model.encoder.layers[li].w.data, grads.w[li].data,
                  w_state[li], cfg.adam);
        adam_step(model.encoder.layers[li].b, grads.b[li], b_state[li], cfg.adam);
      }
      adam_step(s_flat.data, grads.s.data, s_state, cfg.adam);
      adam_step(beta_flat, grads.beta, beta_state, cfg.adam);
      sync_profiles();
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(batches));
    result.val_loss.push_back(
        static_loss(pm, val_slice, val_dna(), model.profiles));
    if (log)
      *log << "train-static epoch " << (epoch + 1) << " train "
           << result.train_loss.back() << " val " << result.val_loss.back()
           << "\n";
  }

  result.model = std::move(model);
  result.model.rebuild_index();
  return result;
}

std::vector<std::size_t> static_rank(const StaticCustomerProfile& prof,
                                     const std::vector<Vec>& candidate_dna,
                                     const std::vector<std::string>& candidate_ids) {
  std::vector<double> scores(candidate_dna.size());
  for (std::size_t i = 0; i < candidate_dna.size(); ++i)
    scores[i] = dot(candidate_dna[i], prof.s);
  return rank_by_score(scores, candidate_ids);
}

void save_static_checkpoint(const StaticModel& model, const std::string& path,
                            std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  binio::write_bytes(out, kMagic, sizeof(kMagic));
  binio::write_u32(out, kVersion);
  binio::write_string(out, std::string(Rng::kAlgorithm));
  binio::write_u64(out, seed);
  binio::write_u32(out, static_cast<std::uint32_t>(model.encoder.output_dim()));
  binio::write_u32(out, static_cast<std::uint32_t>(model.encoder.layers.size()));
  for (const auto& l : model.encoder.layers) {
    binio::write_u32(out, static_cast<std::uint32_t>(l.w.rows));
    binio::write_u32(out, static_cast<std::uint32_t>(l.w.cols));
    binio::write_u8(out, static_cast<std::uint8_t>(l.act));
  }
  binio::write_u64(out, model.customer_ids.size());
  for (const auto& l : model.encoder.layers) {
    binio::write_f64_block(out, l.w.data);
    binio::write_f64_block(out, l.b);
  }
  for (std::size_t k = 0; k < model.customer_ids.size(); ++k) {
    binio::write_string(out, model.customer_ids[k]);
    binio::write_f64_block(out, model.profiles[k].s);
    binio::write_f64(out, model.profiles[k].beta);
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

StaticModel load_static_checkpoint(const std::string& path,
                                   std::uint64_t* seed_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  char magic[8];
  binio::read_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError(path + ": not a static checkpoint");
  const auto version = binio::read_u32(in, "version");
  if (version != kVersion)
    throw ParseError(path + ": unsupported version " + std::to_string(version));
  const std::string rng_id = binio::read_string(in, "rng id");
  if (rng_id != Rng::kAlgorithm)
    throw ParseError(path + ": unknown rng id '" + rng_id + "'");
  const std::uint64_t seed = binio::read_u64(in, "seed");
  if (seed_out) *seed_out = seed;
  const std::uint32_t d = binio::read_u32(in, "embedding dim");
  const std::uint32_t n_layers = binio::read_u32(in, "layer count");
  StaticModel model;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dims;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto rows = binio::read_u32(in, "rows");
    const auto cols = binio::read_u32(in, "cols");
    const auto act = binio::read_u8(in, "activation");
    EncoderLayer l;
    l.w = Mat(rows, cols);
    l.b.assign(rows, 0.0);
    l.act = static_cast<Activation>(act);
    model.encoder.layers.push_back(std::move(l));
    dims.emplace_back(rows, cols);
  }
  if (model.encoder.layers.empty() || model.encoder.output_dim() != d)
    throw ParseError(path + ": inconsistent encoder dims");
  const std::uint64_t k_count = binio::read_u64(in, "customer count");
  for (auto& l : model.encoder.layers) {
    binio::read_f64_block(in, l.w.data, l.w.rows * l.w.cols, "weights");
    binio::read_f64_block(in, l.b, l.w.rows, "biases");
  }
  model.customer_ids.resize(k_count);
  model.profiles.resize(k_count);
  for (std::uint64_t k = 0; k < k_count; ++k) {
    model.customer_ids[k] = binio::read_string(in, "customer id");
    binio::read_f64_block(in, model.profiles[k].s, d, "style");
    model.profiles[k].beta = binio::read_f64(in, "beta");
  }
  model.rebuild_index();
  return model;
}

}  // namespace stylerec
