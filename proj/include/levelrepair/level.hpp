#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace levelrepair {

enum class TileKind : std::uint8_t { Empty = 0, Solid = 1, Start = 2, Goal = 3 };

inline constexpr std::array<TileKind, 4> kAllTileKinds = {TileKind::Empty, TileKind::Solid,
                                                          TileKind::Start, TileKind::Goal};
inline constexpr int kNumChannels = 4;

char to_char(TileKind kind);
TileKind tile_from_char(char ch);  // throws UnknownCharacter
std::string_view to_string(TileKind kind);

/// Start and Goal are walkable like Empty.
constexpr bool is_traversable(TileKind kind) { return kind != TileKind::Solid; }

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Rectangular tile grid with exactly one Start and one Goal. Immutable;
/// edits go through `with_tile`, which revalidates.
class Level {
 public:
  Level(int rows, int cols, std::vector<TileKind> cells, std::string domain = "custom");

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return cells_.size(); }
  const std::vector<TileKind>& cells() const { return cells_; }
  const std::string& domain() const { return domain_; }

  bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * cols_ + c.col; }
  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx / cols_), static_cast<int>(idx % cols_)};
  }
  TileKind at(Cell c) const { return cells_[index(c)]; }
  TileKind at(int row, int col) const { return at(Cell{row, col}); }

  Cell start() const { return start_; }
  Cell goal() const { return goal_; }

  Level with_tile(Cell c, TileKind kind) const;
  Level with_domain(std::string domain) const;

  bool operator==(const Level& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && cells_ == other.cells_;
  }

 private:
  int rows_;
  int cols_;
  std::vector<TileKind> cells_;
  std::string domain_;
  Cell start_;
  Cell goal_;
};

Level parse_level(std::string_view text, std::string domain = "custom");
std::string serialize_level(const Level& level);

Level load_level(const std::string& path, std::string domain = "custom");
void save_level(const Level& level, const std::string& path);

/// Dense rows x cols x 4 tensor, channel order (Empty, Solid, Start, Goal).
struct OneHotTensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  OneHotTensor() = default;
  OneHotTensor(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c * kNumChannels, 0.0) {}

  std::size_t size() const { return values.size(); }
  double& at(int row, int col, int ch) { return values[(static_cast<std::size_t>(row) * cols + col) * kNumChannels + ch]; }
  double at(int row, int col, int ch) const {
    return values[(static_cast<std::size_t>(row) * cols + col) * kNumChannels + ch];
  }
};

OneHotTensor to_onehot(const Level& level);
OneHotTensor zeros_like(const Level& level);
/// Argmax decode; throws AmbiguousCell when the maximum is tied.
Level from_onehot(const OneHotTensor& tensor, std::string domain = "custom");

struct CellChange {
  Cell cell;
  TileKind from;
  TileKind to;
  bool operator==(const CellChange&) const = default;
};

std::vector<CellChange> diff_cells(const Level& a, const Level& b);

}  // namespace levelrepair
