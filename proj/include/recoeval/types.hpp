#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace recoeval {

using Index = std::uint32_t;
inline constexpr Index kNoIndex = static_cast<Index>(-1);

// Rating domain shared by every model and metric.
struct RatingScale {
    double min = 1.0;
    double max = 5.0;
    // Ratings are integer levels {min, ..., max}; the random predictor draws levels.
    bool discrete = true;

    [[nodiscard]] double clamp(double r) const noexcept {
        return r < min ? min : (r > max ? max : r);
    }
    [[nodiscard]] bool contains(double r) const noexcept { return r >= min && r <= max; }
    [[nodiscard]] bool operator==(const RatingScale&) const = default;
};

struct RatingLog {
    std::string user_id;
    std::string item_id;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;

    [[nodiscard]] bool operator==(const RatingLog&) const = default;
};

// One observation after id interning; indices refer to a SplitDataset.
struct Rating {
    Index user = kNoIndex;
    Index item = kNoIndex;
    double value = 0.0;
};

enum class UserClass : std::uint8_t { Heavy, Light };
enum class ItemClass : std::uint8_t { Popular, Unpopular };

// Column order follows the reporting layout: HuserPitem, LuserPitem, HuserUitem, LuserUitem.
enum class Segment : std::uint8_t { HuserPitem = 0, LuserPitem = 1, HuserUitem = 2, LuserUitem = 3 };
inline constexpr std::size_t kSegmentCount = 4;

[[nodiscard]] constexpr Segment make_segment(UserClass u, ItemClass i) noexcept {
    if (u == UserClass::Heavy) {
        return i == ItemClass::Popular ? Segment::HuserPitem : Segment::HuserUitem;
    }
    return i == ItemClass::Popular ? Segment::LuserPitem : Segment::LuserUitem;
}

[[nodiscard]] constexpr UserClass user_class_of(Segment s) noexcept {
    return (s == Segment::HuserPitem || s == Segment::HuserUitem) ? UserClass::Heavy
                                                                    : UserClass::Light;
}

[[nodiscard]] constexpr std::string_view to_string(Segment s) noexcept {
    switch (s) {
        case Segment::HuserPitem: return "HuserPitem";
        case Segment::LuserPitem: return "LuserPitem";
        case Segment::HuserUitem: return "HuserUitem";
        case Segment::LuserUitem: return "LuserUitem";
    }
    return "?";
}

[[nodiscard]] constexpr std::string_view to_string(UserClass c) noexcept {
    return c == UserClass::Heavy ? "Huser" : "Luser";
}

// Error families; the CLI maps each to its own exit code.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace recoeval
