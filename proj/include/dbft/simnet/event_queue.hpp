#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "dbft/core.hpp"

namespace dbft::simnet {

/// Min-queue keyed by (time, insertion sequence). Ties at the same time pop in
/// insertion order, so the pop order is a pure function of the push history.
template <typename T>
class EventQueue {
public:
    struct Entry {
        Time time;
        std::uint64_t seq;
        T payload;
    };

    std::uint64_t push(Time time, T payload) {
        const auto seq = next_seq_++;
        heap_.push(Entry{time, seq, std::move(payload)});
        return seq;
    }

    Entry pop() {
        if (heap_.empty()) throw std::out_of_range("pop on empty event queue");
        Entry e = std::move(const_cast<Entry&>(heap_.top()));
        heap_.pop();
        return e;
    }

    [[nodiscard]] const Entry& top() const {
        if (heap_.empty()) throw std::out_of_range("top on empty event queue");
        return heap_.top();
    }
    [[nodiscard]] bool empty() const { return heap_.empty(); }
    [[nodiscard]] std::size_t size() const { return heap_.size(); }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace dbft::simnet
