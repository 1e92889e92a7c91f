#include "gmrs/algebra.hpp"

#include <algorithm>
#include <set>

namespace gmrs {

Demands::Demands(int num_users, std::vector<MessageLabel> catalogue,
                 std::vector<std::vector<MessageLabel>> requests)
    : num_users_(num_users), catalogue_(std::move(catalogue)), requests_(std::move(requests)) {
  if (num_users_ < 1 || num_users_ > UserSet::kMaxUsers)
    throw std::invalid_argument("Demands: user count must be in [1, 16]");
  if (static_cast<int>(requests_.size()) != num_users_)
    throw std::invalid_argument("Demands: one request list per user required");
  std::set<MessageLabel> known(catalogue_.begin(), catalogue_.end());
  if (known.size() != catalogue_.size())
    throw std::invalid_argument("Demands: duplicate message label in catalogue");
  if (catalogue_.empty()) throw std::invalid_argument("Demands: empty catalogue");
  std::set<MessageLabel> requested;
  for (int k = 0; k < num_users_; ++k) {
    if (requests_[k].empty())
      throw std::invalid_argument("Demands: user " + std::to_string(k) + " requests nothing");
    std::set<MessageLabel> seen;
    for (const auto& label : requests_[k]) {
      if (!known.count(label))
        throw std::invalid_argument("Demands: unknown message label '" + label + "'");
      if (!seen.insert(label).second)
        throw std::invalid_argument("Demands: duplicate request of '" + label + "'");
      requested.insert(label);
    }
  }
  if (requested.size() != catalogue_.size())
    throw std::invalid_argument("Demands: catalogue contains a message nobody requests");
}

UserSet Demands::audience(const MessageLabel& label) const {
  std::uint32_t bits = 0;
  for (int k = 0; k < num_users_; ++k)
    if (std::find(requests_[k].begin(), requests_[k].end(), label) != requests_[k].end())
      bits |= 1u << k;
  if (bits == 0) throw std::invalid_argument("audience: unknown label '" + label + "'");
  return UserSet::of_bits(bits);
}

int MessagePartition::group_index(UserSet s) const {
  for (int i = 0; i < static_cast<int>(groups.size()); ++i)
    if (groups[i] == s) return i;
  return -1;
}

MessagePartition compute_partition(const Demands& demands) {
  // Group messages by their exact audience set; a message requested by the
  // users in S and no one else belongs to the cell of S.
  std::map<std::uint32_t, std::vector<MessageLabel>> cells;
  for (const auto& label : demands.catalogue())
    cells[demands.audience(label).bits()].push_back(label);

  MessagePartition p;
  p.num_users = demands.num_users();
  p.groups.reserve(cells.size());
  for (auto& [bits, labels] : cells) p.groups.push_back(UserSet::of_bits(bits));
  std::sort(p.groups.begin(), p.groups.end(), canonical_less);
  p.units.reserve(cells.size());
  for (const auto& g : p.groups) {
    auto labels = cells.at(g.bits());
    std::sort(labels.begin(), labels.end());
    p.units.push_back(std::move(labels));
  }
  return p;
}

const char* to_string(SplitScheme s) {
  switch (s) {
    case SplitScheme::Full: return "Full";
    case SplitScheme::OneLayer: return "OneLayer";
    case SplitScheme::NoSplit: return "NoSplit";
    case SplitScheme::Custom: return "Custom";
  }
  return "?";
}

int LayerStructure::layer_index(UserSet g) const {
  for (int i = 0; i < static_cast<int>(layers.size()); ++i)
    if (layers[i] == g) return i;
  return -1;
}

LayerStructure build_layers(const MessagePartition& partition, SplitScheme scheme,
                            const std::vector<std::vector<UserSet>>* custom) {
  const int K = partition.num_users;
  const UserSet everyone = UserSet::all(K);
  const int num_groups = static_cast<int>(partition.groups.size());
  if (num_groups == 0) throw std::invalid_argument("build_layers: empty partition");

  // Per-audience layer lists.
  std::vector<std::vector<UserSet>> per_group(num_groups);
  if (scheme == SplitScheme::Custom) {
    if (custom == nullptr || static_cast<int>(custom->size()) != num_groups)
      throw std::invalid_argument("build_layers: custom scheme needs one layer list per audience");
    per_group = *custom;
    for (int i = 0; i < num_groups; ++i) {
      const UserSet s = partition.groups[i];
      bool has_own = false;
      std::set<std::uint32_t> seen;
      if (per_group[i].empty())
        throw std::invalid_argument("build_layers: empty custom layer list");
      for (const UserSet g : per_group[i]) {
        if (!s.subset_of(g))
          throw std::invalid_argument("build_layers: custom layer " + g.to_string() +
                                      " does not cover audience " + s.to_string());
        if (!g.subset_of(everyone))
          throw std::invalid_argument("build_layers: custom layer outside user range");
        if (!seen.insert(g.bits()).second)
          throw std::invalid_argument("build_layers: duplicate custom layer");
        has_own = has_own || g == s;
      }
      if (!has_own)
        throw std::invalid_argument("build_layers: custom list for " + s.to_string() +
                                    " must include the audience itself");
    }
  } else {
    for (int i = 0; i < num_groups; ++i) {
      const UserSet s = partition.groups[i];
      switch (scheme) {
        case SplitScheme::Full:
          per_group[i] = supersets_within(s, everyone);
          break;
        case SplitScheme::OneLayer:
          per_group[i].push_back(s);
          if (!(s == everyone)) per_group[i].push_back(everyone);
          break;
        case SplitScheme::NoSplit:
          per_group[i].push_back(s);
          break;
        case SplitScheme::Custom:
          break;  // handled above
      }
    }
  }

  LayerStructure ls;
  ls.num_users = K;
  ls.scheme = scheme;
  ls.groups = partition.groups;

  std::set<std::uint32_t> layer_bits;
  for (const auto& list : per_group)
    for (const UserSet g : list) layer_bits.insert(g.bits());
  ls.layers.reserve(layer_bits.size());
  for (std::uint32_t b : layer_bits) ls.layers.push_back(UserSet::of_bits(b));
  std::sort(ls.layers.begin(), ls.layers.end(), canonical_less);

  ls.layers_of_group.resize(num_groups);
  ls.groups_of_layer.resize(ls.layers.size());
  for (int i = 0; i < num_groups; ++i) {
    for (const UserSet g : per_group[i]) {
      const int li = ls.layer_index(g);
      ls.layers_of_group[i].push_back(li);
    }
    std::sort(ls.layers_of_group[i].begin(), ls.layers_of_group[i].end());
    for (int li : ls.layers_of_group[i]) ls.groups_of_layer[li].push_back(i);
  }

  ls.layers_of_user.resize(K);
  for (int k = 0; k < K; ++k)
    for (int li = 0; li < ls.num_layers(); ++li)
      if (ls.layers[li].contains(k)) ls.layers_of_user[k].push_back(li);

  // Sub-message index: ordered by audience, then by that audience's layers.
  ls.subs_of_group.resize(num_groups);
  ls.subs_of_layer.resize(ls.layers.size());
  for (int i = 0; i < num_groups; ++i)
    for (int li : ls.layers_of_group[i]) {
      const int pos = ls.num_subs();
      ls.sub_index.push_back({i, li});
      ls.subs_of_group[i].push_back(pos);
      ls.subs_of_layer[li].push_back(pos);
    }
  return ls;
}

RateAllocation assemble_rates(const LayerStructure& layers, const Eigen::VectorXd& sub_rates) {
  if (sub_rates.size() != layers.num_subs())
    throw std::invalid_argument("assemble_rates: rate vector size mismatch");
  if ((sub_rates.array() < 0).any())
    throw std::invalid_argument("assemble_rates: negative rate");
  RateAllocation r;
  r.sub_rates = sub_rates;
  r.unit_rates = Eigen::VectorXd::Zero(static_cast<int>(layers.groups.size()));
  r.layer_rates = Eigen::VectorXd::Zero(layers.num_layers());
  for (int j = 0; j < layers.num_subs(); ++j) {
    r.unit_rates[layers.sub_index[j].group] += sub_rates[j];
    r.layer_rates[layers.sub_index[j].layer] += sub_rates[j];
  }
  return r;
}

}  // namespace gmrs
