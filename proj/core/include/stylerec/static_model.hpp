// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "stylerec/catalog.hpp"
#include "stylerec/numerics.hpp"

namespace stylerec {

enum class Activation : std::uint8_t { rectifier = 0, identity = 1 };

struct EncoderLayer {
  Mat w;
  Vec b;
  Activation act = Activation::identity;
};

/// Feedforward encoder mapping an article feature vector to its embedding.
/// The last layer is always identity so embeddings are unconstrained reals.
struct EncoderParams {
  std::vector<EncoderLayer> layers;

  std::size_t input_dim() const { return layers.front().w.cols; }
  std::size_t output_dim() const { return layers.back().w.rows; }
  std::size_t param_count() const;
};

/// Per-customer style vector and purchase-propensity bias.
struct StaticCustomerProfile {
  Vec s;
  double beta = 0.0;
};

struct StaticModel {
  EncoderParams encoder;
  std::vector<std::string> customer_ids;
  std::vector<StaticCustomerProfile> profiles;  // parallel to customer_ids

  int customer_index(const std::string& id) const;
  void rebuild_index();
  std::size_t param_count() const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

struct StaticTrainConfig {
  std::size_t hidden = 256;
  std::size_t embedding_dim = 128;
  std::size_t epochs = 10;
  std::size_t batch_articles = 128;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct StaticTrainResult {
  StaticModel model;
  Vec val_loss;    // [0] is the pre-training value, then one entry per epoch
  Vec train_loss;  // mean batch loss per epoch
};

/// Deterministic forward pass; the article embedding.
Vec encode_article(const EncoderParams& enc, const Vec& features);

/// Embeddings for every article, in catalog order.
std::vector<Vec> encode_catalog(const EncoderParams& enc,
                                const Catalog& catalog, const Schema& schema);

/// sigma(f . s + beta), the probability that this customer buys the article.
double purchase_prob(const Vec& f, const StaticCustomerProfile& prof);

/// Mean over batch articles of the mean cross-entropy over all customers.
/// Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs, so the
/// value is finite for any parameters.
double static_loss(const PurchaseMatrix& pm,
                   const std::vector<std::size_t>& article_batch,
                   const std::vector<Vec>& batch_dna,
                   const std::vector<StaticCustomerProfile>& profiles);

/// Analytic gradients of static_loss for one batch, encoder included.
struct StaticGrads {
  std::vector<Mat> w;  // per encoder layer
  std::vector<Vec> b;
  Mat s;     // customers x D
  Vec beta;  // customers
};

StaticGrads static_loss_gradients(const EncoderParams& enc,
                                  const std::vector<Vec>& batch_features,
                                  const std::vector<std::size_t>& article_batch,
                                  const PurchaseMatrix& pm,
                                  const std::vector<StaticCustomerProfile>& profiles,
                                  double* loss_out = nullptr);

/// Joint mini-batch training of the encoder and all customer profiles.
StaticTrainResult train_static(const Catalog& catalog, const Schema& schema,
                               const PurchaseMatrix& pm,
                               const StaticTrainConfig& cfg,
                               std::ostream* log = nullptr);

/// Candidate permutation by descending f . s; the bias adds the same constant
/// to every candidate, so it is dropped. Ties break by ascending article id.
std::vector<std::size_t> static_rank(const StaticCustomerProfile& prof,
                                     const std::vector<Vec>& candidate_dna,
                                     const std::vector<std::string>& candidate_ids);

// Checkpoint: fixed header, then raw little-endian 64-bit parameter blocks,
// then per-customer records. Round-trips bit-exactly.
void save_static_checkpoint(const StaticModel& model, const std::string& path,
                            std::uint64_t seed);
StaticModel load_static_checkpoint(const std::string& path,
                                   std::uint64_t* seed_out = nullptr);

}  // namespace stylerec
