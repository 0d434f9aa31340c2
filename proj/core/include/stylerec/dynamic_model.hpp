// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stylerec/catalog.hpp"
#include "stylerec/numerics.hpp"
#include "stylerec/rng.hpp"

namespace stylerec {

enum class TimeEncoding : std::uint8_t { annual_phase = 0, raw_years = 1 };
enum class LossKind : std::uint8_t { sigmoid = 0, softmax = 1, rank = 2 };

std::size_t time_feature_width(TimeEncoding enc);

/// annual_phase: [years since epoch, sin(2 pi year-fraction), cos(...)].
/// raw_years: just the linear term, for ablation runs.
Vec encode_time(Minutes t, TimeEncoding enc = TimeEncoding::annual_phase);

/// Single-layer LSTM with a linear projection from hidden state to the
/// embedding space. Gate rows are blocked [input | forget | candidate |
/// output], each block `hidden` wide.
struct LstmParams {
  std::size_t hidden = 0;
  std::size_t embedding_dim = 0;
  TimeEncoding time_enc = TimeEncoding::annual_phase;
  Mat w_gates;  // 4H x (U + H)
  Vec b_gates;  // 4H
  Mat w_proj;   // D x H
  Vec b_proj;   // D

  std::size_t input_dim() const {
    return 2 * time_feature_width(time_enc) + embedding_dim;
  }
  std::size_t param_count() const {
    return w_gates.size() + b_gates.size() + w_proj.size() + b_proj.size();
  }
};

/// Forget-gate bias starts at 1 so early training does not erase the memory;
/// all other biases start at 0.
LstmParams init_lstm(std::size_t hidden, std::size_t embedding_dim,
                     TimeEncoding enc, Rng& rng);

struct LstmState {
  Vec cell;
  Vec hidden;
};

LstmState zero_state(const LstmParams& p);

/// Input layout [time(prev) | embedding(prev) | time(now)]. With no previous
/// purchase the first two blocks are zero wholesale (the time features of the
/// missing purchase are zeroed too, not encoded at t=0).
Vec step_input(const std::optional<std::pair<Vec, Minutes>>& prev,
               Minutes t_now, TimeEncoding enc, std::size_t embedding_dim);

/// One cell update; the emitted hidden vector is state.hidden of the result.
LstmState lstm_step(const LstmParams& p, const LstmState& state, const Vec& x);

struct EmbeddedEvent {
  std::string article;
  Minutes t = 0;
  Vec dna;
};

struct EmbeddedSequence {
  std::string customer;
  std::vector<EmbeddedEvent> events;
};

struct DynamicStyle {
  Vec d;
  std::size_t at_step = 0;  // 1-based purchase index; N+1 for the eval step
  std::string customer;
};

/// Runs the cell over the whole purchase history from a zero state and
/// projects each hidden state to a style vector. When eval_time is given one
/// extra step is appended whose previous purchase is the last event and whose
/// current timestamp is eval_time; its style is the one to rank with.
std::vector<DynamicStyle> style_sequence(
    const LstmParams& p, const EmbeddedSequence& seq,
    std::optional<Minutes> eval_time = std::nullopt);

/// Attach embeddings (by catalog index) to a raw purchase sequence.
EmbeddedSequence embed_sequence(const PurchaseSequence& seq,
                                const Catalog& catalog,
                                const std::vector<Vec>& dna_by_index);

/// Uniformly permutes events inside each equal-timestamp group; group
/// boundaries and the across-group order never change.
PurchaseSequence shuffle_orders(const PurchaseSequence& seq, Rng& rng);
void shuffle_orders_embedded(EmbeddedSequence& seq, Rng& rng);

/// mask[i] is true iff event i opens a new timestamp group; only those steps
/// contribute to the loss.
std::vector<bool> order_mask(const std::vector<Minutes>& timestamps);

/// Uniform draw without replacement from the articles in store at t minus the
/// excluded set. Throws SamplingError when the pool is smaller than n.
std::vector<std::size_t> sample_negative_indices(
    const Catalog& catalog, Minutes t,
    const std::unordered_set<std::size_t>& exclude, std::size_t n, Rng& rng,
    bool ignore_availability = false);

std::vector<std::string> sample_negatives(
    const Catalog& catalog, Minutes t,
    const std::unordered_set<std::string>& exclude, std::size_t n, Rng& rng);

/// The three training objectives, scored from the style vector d, the bought
/// article's embedding and n negative embeddings.
double sequence_loss(LossKind kind, const Vec& d, const Vec& f_pos,
                     const std::vector<const Vec*>& negs);
double sequence_loss(LossKind kind, const Vec& d, const Vec& f_pos,
                     const std::vector<Vec>& negs);

/// d-gradient of sequence_loss (embeddings are frozen inputs).
Vec sequence_loss_grad(LossKind kind, const Vec& d, const Vec& f_pos,
                       const std::vector<const Vec*>& negs,
                       double* loss_out = nullptr);

/// One training sequence after per-epoch preparation: orders shuffled, the
/// loss mask computed and negatives drawn for every masked step.
struct MaskedSequence {
  EmbeddedSequence seq;
  std::vector<bool> mask;
  std::vector<std::vector<const Vec*>> negatives;  // per step, empty if unmasked
};

struct LstmGrads {
  Mat w_gates;
  Vec b_gates;
  Mat w_proj;
  Vec b_proj;
};

/// Analytic gradients of the mean masked loss over the batch with respect to
/// every LSTM and projection parameter, by backpropagation through time.
LstmGrads bptt_gradients(const LstmParams& p,
                         const std::vector<MaskedSequence>& batch,
                         LossKind kind, double* mean_loss_out = nullptr);

struct TrainConfigDyn {
  LossKind kind = LossKind::rank;
  std::size_t negatives = 20;
  std::size_t epochs = 5;
  std::size_t batch_sequences = 32;
  double clip_norm = 5.0;
  std::size_t hidden = 256;
  TimeEncoding time_enc = TimeEncoding::annual_phase;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct DynTrainResult {
  LstmParams params;
  Vec val_loss;    // rank-loss on the validation customers; [0] pre-training
  Vec train_loss;  // mean masked training loss per epoch
  std::size_t negative_fallbacks = 0;  // pool-too-small whole-catalog draws
};

/// Trains the LSTM on customer purchase sequences. Embeddings are frozen
/// inputs; each epoch reshuffles same-timestamp orders and redraws negatives.
DynTrainResult train_dynamic(const Catalog& catalog,
                             const std::vector<PurchaseSequence>& train_seqs,
                             const std::vector<Vec>& dna_by_index,
                             const TrainConfigDyn& cfg,
                             std::ostream* log = nullptr);

struct DynCheckpointMeta {
  LossKind kind = LossKind::rank;
  std::size_t negatives = 0;
  std::uint64_t seed = 0;
};

void save_dynamic_checkpoint(const LstmParams& params,
                             const DynCheckpointMeta& meta,
                             const std::string& path);
LstmParams load_dynamic_checkpoint(const std::string& path,
                                   DynCheckpointMeta* meta_out = nullptr);

}  // namespace stylerec
