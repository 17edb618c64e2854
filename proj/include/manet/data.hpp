#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manet/error.hpp"
#include "manet/matrix.hpp"

namespace manet {

/// n x d binary attendance data: y(i, j) = 1 if actor i attended event j.
struct IncidenceMatrix {
  Matrix<uint8_t> y;
  std::vector<std::string> actor_labels;
  std::vector<std::string> event_labels;

  int actors() const { return y.rows(); }
  int events() const { return y.cols(); }

  void validate() const {
    if (actors() < 1 || events() < 1) throw DataError("incidence matrix must be non-empty");
    if (static_cast<int>(actor_labels.size()) != actors())
      throw DataError("actor label count does not match row count");
    if (static_cast<int>(event_labels.size()) != events())
      throw DataError("event label count does not match column count");
    for (int i = 0; i < actors(); ++i)
      for (int j = 0; j < events(); ++j)
        if (y(i, j) != 0 && y(i, j) != 1)
          throw DataError("incidence entry at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") is not 0/1");
  }

  /// Per-actor sorted list of attended event indices; the samplers iterate
  /// over these instead of the full rows.
  std::vector<std::vector<int>> attended_events() const {
    std::vector<std::vector<int>> att(actors());
    for (int i = 0; i < actors(); ++i)
      for (int j = 0; j < events(); ++j)
        if (y(i, j)) att[i].push_back(j);
    return att;
  }
};

}  // namespace manet
