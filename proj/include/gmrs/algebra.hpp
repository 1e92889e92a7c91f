#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gmrs/sets.hpp"

namespace gmrs {

using MessageLabel = std::string;

// Per-user demand sets over a shared message catalogue.  Message labels are
// opaque strings; users are 0-based indices.  Construction validates that
// every user requests at least one message, every requested label is in the
// catalogue, and every catalogue entry is requested by someone.
class Demands {
 public:
  Demands(int num_users, std::vector<MessageLabel> catalogue,
          std::vector<std::vector<MessageLabel>> requests);

  int num_users() const { return num_users_; }
  const std::vector<MessageLabel>& catalogue() const { return catalogue_; }
  const std::vector<MessageLabel>& requests(int user) const { return requests_.at(user); }

  // The set of users that request `label`.
  UserSet audience(const MessageLabel& label) const;

 private:
  int num_users_;
  std::vector<MessageLabel> catalogue_;
  std::vector<std::vector<MessageLabel>> requests_;
};

// The grouping of messages by their exact audience: one cell per distinct
// nonempty audience set S, holding the messages requested by exactly the
// users in S (each message lands in exactly one cell).  Cells are kept in
// canonical set order; message lists are sorted.
struct MessagePartition {
  int num_users = 0;
  std::vector<UserSet> groups;                     // distinct audiences, canonical order
  std::vector<std::vector<MessageLabel>> units;    // messages per audience, aligned with groups

  int group_index(UserSet s) const;                // -1 if absent
  bool operator==(const MessagePartition&) const = default;
};

MessagePartition compute_partition(const Demands& demands);

// How each audience's content is spread over transmission layers.
//  - Full:     every superset of the audience is a layer it may use.
//  - OneLayer: the audience's own layer plus the all-users layer.
//  - NoSplit:  the audience's own layer only.
//  - Custom:   caller-provided layer lists (validated: own set present, all
//              entries are supersets).
enum class SplitScheme { Full, OneLayer, NoSplit, Custom };

const char* to_string(SplitScheme s);

struct LayerStructure {
  int num_users = 0;
  SplitScheme scheme = SplitScheme::Full;
  std::vector<UserSet> groups;                 // audiences, canonical order
  std::vector<UserSet> layers;                 // union of all per-audience layer lists, canonical order

  // Indices into `layers` / `groups`:
  std::vector<std::vector<int>> layers_of_group;   // layers audience S may ride on
  std::vector<std::vector<int>> groups_of_layer;   // audiences riding on layer G
  std::vector<std::vector<int>> layers_of_user;    // layers whose set contains user k

  // One entry per (audience, layer) pair with the audience allowed on the
  // layer; this is the index space of per-layer content rates.
  struct SubEntry {
    int group;
    int layer;
    bool operator==(const SubEntry&) const = default;
  };
  std::vector<SubEntry> sub_index;
  std::vector<std::vector<int>> subs_of_group;     // sub_index positions per audience
  std::vector<std::vector<int>> subs_of_layer;     // sub_index positions per layer

  int num_layers() const { return static_cast<int>(layers.size()); }
  int num_subs() const { return static_cast<int>(sub_index.size()); }
  int layer_index(UserSet g) const;                // -1 if absent
};

LayerStructure build_layers(const MessagePartition& partition, SplitScheme scheme,
                            const std::vector<std::vector<UserSet>>* custom = nullptr);

// Rates assembled from the per-(audience, layer) content rates: per-audience
// totals and per-layer totals.
struct RateAllocation {
  Eigen::VectorXd sub_rates;     // over layers.sub_index
  Eigen::VectorXd unit_rates;    // per audience: sum of its sub rates
  Eigen::VectorXd layer_rates;   // per layer: sum of sub rates riding on it
};

RateAllocation assemble_rates(const LayerStructure& layers, const Eigen::VectorXd& sub_rates);

}  // namespace gmrs
