#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "goalrec/dataset.hpp"
#include "goalrec/error.hpp"
#include "goalrec/grid_map.hpp"
#include "goalrec/strips.hpp"

namespace goalrec {

struct EncodedExample {
  std::vector<double> features;
  std::size_t label = 0;
  std::size_t path_id = 0;
  int truncation = 100;
};

/// Positions kept when a walk is longer than `max_obs`: evenly spaced, always
/// ending with the last observation.
inline std::vector<std::size_t> coordinate_indices(std::size_t length, std::size_t max_obs) {
  const auto m = std::min(length, max_obs);
  std::vector<std::size_t> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = (i + 1) * length / m - 1;
  return idx;
}

/// Fixed-length coordinate encoding: ((x+1)/width, (y+1)/height) per kept
/// position, zero-padded to 2*max_obs values. The +1 shift keeps real cells
/// distinct from padding.
inline std::vector<double> encode_coords(std::span<const Cell> obs, int width, int height,
                                         std::size_t max_obs) {
  if (max_obs == 0) throw InvalidArgument("max_obs must be at least 1");
  if (obs.empty()) throw InvalidArgument("cannot encode an empty observation sequence");
  std::vector<double> f(2 * max_obs, 0.0);
  const auto idx = coordinate_indices(obs.size(), max_obs);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    f[2 * i] = static_cast<double>(obs[idx[i]].x + 1) / width;
    f[2 * i + 1] = static_cast<double>(obs[idx[i]].y + 1) / height;
  }
  return f;
}

inline EncodedExample encode_nav(const NavProblem& p, const GridMap& map, std::size_t max_obs) {
  return {encode_coords(p.observations, map.width(), map.height(), max_obs), p.true_goal, p.path_id,
          p.truncation};
}

/// Symbol tables for the one-hot action encoding: one block for the action
/// name, then one object block per argument slot.
class OneHotVocab {
 public:
  OneHotVocab(std::vector<std::string> action_names, std::vector<std::string> objects,
              std::size_t max_arity)
      : max_arity_(max_arity) {
    for (auto& a : action_names) actions_.emplace(a, actions_.size());
    for (auto& o : objects) objects_.emplace(o, objects_.size());
  }

  static OneHotVocab from(const StripsProblem& p) {
    return OneHotVocab(p.schemas, p.objects, p.max_arity);
  }

  std::size_t width() const noexcept { return actions_.size() + max_arity_ * objects_.size(); }

  void encode_into(const GroundAction& a, std::span<double> out) const {
    auto ai = actions_.find(a.name);
    if (ai == actions_.end()) throw InvalidArgument("out-of-vocabulary action '" + a.name + "'");
    if (a.args.size() > max_arity_) throw InvalidArgument("action '" + a.name + "' exceeds vocabulary arity");
    std::fill(out.begin(), out.end(), 0.0);
    out[ai->second] = 1.0;
    for (std::size_t slot = 0; slot < a.args.size(); ++slot) {
      auto oi = objects_.find(a.args[slot]);
      if (oi == objects_.end()) throw InvalidArgument("out-of-vocabulary object '" + a.args[slot] + "'");
      out[actions_.size() + slot * objects_.size() + oi->second] = 1.0;
    }
  }

 private:
  std::map<std::string, std::size_t> actions_;
  std::map<std::string, std::size_t> objects_;
  std::size_t max_arity_;
};

/// One-hot encodes an action sequence into `max_len` slots. With `augment`,
/// returns max_len - size + 1 copies shifted right by 0, 1, ... slots;
/// otherwise only the left-aligned copy.
inline std::vector<std::vector<double>> encode_onehot(std::span<const GroundAction> seq,
                                                      const OneHotVocab& vocab, std::size_t max_len,
                                                      bool augment) {
  if (seq.size() > max_len)
    throw InvalidArgument("sequence of length " + std::to_string(seq.size()) +
                          " exceeds max_len " + std::to_string(max_len));
  const auto w = vocab.width();
  std::vector<double> base(max_len * w, 0.0);
  for (std::size_t i = 0; i < seq.size(); ++i)
    vocab.encode_into(seq[i], std::span<double>(base).subspan(i * w, w));
  const std::size_t copies = augment ? max_len - seq.size() + 1 : 1;
  std::vector<std::vector<double>> out;
  out.reserve(copies);
  for (std::size_t shift = 0; shift < copies; ++shift) {
    std::vector<double> f(max_len * w, 0.0);
    std::copy(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(seq.size() * w),
              f.begin() + static_cast<std::ptrdiff_t>(shift * w));
    out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<EncodedExample> encode_task(const TaskProblem& p, const OneHotVocab& vocab,
                                               std::size_t max_len, bool augment) {
  std::vector<GroundAction> seq;
  seq.reserve(p.observations.size());
  for (auto a : p.observations) seq.push_back(p.strips->actions.at(a));
  std::vector<EncodedExample> out;
  for (auto& f : encode_onehot(seq, vocab, max_len, augment))
    out.push_back({std::move(f), p.true_goal, p.path_id, p.truncation});
  return out;
}

}  // namespace goalrec
