#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pseudocam {

enum class Transition { VideoStart, Hard, Gradual };

std::string_view to_string(Transition t);
std::optional<Transition> parse_transition(std::string_view text);

/// Frame interval [start, end] (both inclusive) of one video. `id` is the
/// shot's position in the unfiltered list and survives filtering, so frame
/// offsets and successor relations stay computable after shots are dropped.
struct Shot {
  int id = 0;
  long start = 0;
  long end = 0;
  Transition transition_in = Transition::VideoStart;

  long length() const { return end - start + 1; }

  friend bool operator==(const Shot&, const Shot&) = default;
};

struct ShotList {
  std::string video_id;
  long frame_count = 0;
  std::vector<Shot> shots;
  bool accepted = false;

  std::size_t hard_transition_count() const;
  const Shot* find(int id) const;

  friend bool operator==(const ShotList&, const ShotList&) = default;
};

/// Videos need at least this many hard cuts to be kept.
inline constexpr std::size_t kMinHardTransitions = 10;

}  // namespace pseudocam
