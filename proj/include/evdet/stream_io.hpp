#pragma once

// Line-delimited stream files: one JSON record per line with fields
// id, block, text, timestamp, user, mentions, hashtags, entities, event_label.

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "evdet/types.hpp"

namespace evdet {

namespace detail {

inline std::set<std::string> string_set(const nlohmann::json& j, const std::string& key,
                                        std::size_t line_no) {
    std::set<std::string> out;
    if (!j.contains(key)) return out;
    const auto& arr = j.at(key);
    if (!arr.is_array())
        throw ParseError("line " + std::to_string(line_no) + ": field '" + key +
                         "' must be an array of strings");
    for (const auto& v : arr) {
        if (!v.is_string())
            throw ParseError("line " + std::to_string(line_no) + ": field '" + key +
                             "' must be an array of strings");
        out.insert(v.get<std::string>());
    }
    return out;
}

}  // namespace detail

// Parses one record line. Exposed separately so tests can probe error paths.
inline std::pair<int, Message> parse_record(const std::string& line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    for (const char* req : {"id", "block", "text", "timestamp", "user"}) {
        if (!j.contains(req))
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": missing required field '" + req + "'");
    }
    Message m;
    try {
        m.id = j.at("id").get<std::string>();
        m.text = j.at("text").get<std::string>();
        m.timestamp = j.at("timestamp").get<std::int64_t>();
        m.user = j.at("user").get<std::string>();
        m.mentions = detail::string_set(j, "mentions", line_no);
        m.hashtags = detail::string_set(j, "hashtags", line_no);
        m.entities = detail::string_set(j, "entities", line_no);
        if (j.contains("event_label") && !j.at("event_label").is_null())
            m.event_label = j.at("event_label").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("line " + std::to_string(line_no) + ": bad field type: " + e.what());
    }
    int block = -1;
    try {
        block = j.at("block").get<int>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": field 'block' must be an integer");
    }
    if (block < 0)
        throw ValidationError("line " + std::to_string(line_no) + ": negative block index");
    validate_message(m);
    return {block, m};
}

inline std::vector<MessageBlock> load_stream(std::istream& in) {
    std::map<int, std::vector<Message>> grouped;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto [block, msg] = parse_record(line, line_no);
        grouped[block].push_back(std::move(msg));
    }

    std::vector<MessageBlock> blocks;
    int expected = 0;
    for (auto& [idx, msgs] : grouped) {
        if (idx != expected)
            throw ValidationError("block indices are not contiguous from 0 (found " +
                                  std::to_string(idx) + ", expected " + std::to_string(expected) +
                                  ")");
        ++expected;
        std::unordered_set<std::string> seen;
        for (const auto& m : msgs) {
            if (!seen.insert(m.id).second)
                throw ValidationError("duplicate message id '" + m.id + "' in block " +
                                      std::to_string(idx));
        }
        std::stable_sort(msgs.begin(), msgs.end(), [](const Message& a, const Message& b) {
            if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
            return a.id < b.id;
        });
        blocks.push_back(MessageBlock{idx, std::move(msgs)});
    }
    return blocks;
}

inline std::vector<MessageBlock> load_stream(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open stream file '" + path + "'");
    return load_stream(in);
}

inline nlohmann::json record_json(const Message& m, int block) {
    nlohmann::json j;
    j["id"] = m.id;
    j["block"] = block;
    j["text"] = m.text;
    j["timestamp"] = m.timestamp;
    j["user"] = m.user;
    j["mentions"] = m.mentions;
    j["hashtags"] = m.hashtags;
    j["entities"] = m.entities;
    if (m.event_label) j["event_label"] = *m.event_label;
    return j;
}

inline void write_stream(std::ostream& out, const std::vector<MessageBlock>& blocks) {
    for (const auto& b : blocks)
        for (const auto& m : b.messages) out << record_json(m, b.index).dump() << "\n";
}

inline void write_stream(const std::string& path, const std::vector<MessageBlock>& blocks) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    write_stream(out, blocks);
}

}  // namespace evdet
