#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace evdet {

// Thrown for malformed input files; carries the offending line number in the message.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when a record or config violates a documented invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown for failures inside a running pipeline (sampling, encoding, clustering).
class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One social post. Attribute sets are kept ordered so serialization is canonical.
struct Message {
    std::string id;
    std::string text;
    std::int64_t timestamp = 0;
    std::string user;
    std::set<std::string> mentions;
    std::set<std::string> hashtags;
    std::set<std::string> entities;
    std::optional<std::int64_t> event_label;

    bool operator==(const Message&) const = default;
};

// All messages of one time block, ordered by timestamp.
struct MessageBlock {
    int index = 0;
    std::vector<Message> messages;

    bool operator==(const MessageBlock&) const = default;

    bool fully_labeled() const {
        for (const auto& m : messages)
            if (!m.event_label) return false;
        return true;
    }

    // Distinct labels, ascending. Empty when any message is unlabeled.
    std::vector<std::int64_t> distinct_labels() const {
        std::set<std::int64_t> s;
        for (const auto& m : messages) {
            if (!m.event_label) return {};
            s.insert(*m.event_label);
        }
        return {s.begin(), s.end()};
    }
};

inline void validate_message(const Message& m) {
    if (m.id.empty()) throw ValidationError("message has empty id");
    if (m.timestamp < 0) throw ValidationError("message '" + m.id + "' has negative timestamp");
    if (m.event_label && *m.event_label < 0)
        throw ValidationError("message '" + m.id + "' has negative event_label");
    auto no_empty = [&](const std::set<std::string>& s, const char* what) {
        if (s.count(std::string{}))
            throw ValidationError("message '" + m.id + "' has empty string in " + what);
    };
    no_empty(m.mentions, "mentions");
    no_empty(m.hashtags, "hashtags");
    no_empty(m.entities, "entities");
}

}  // namespace evdet
