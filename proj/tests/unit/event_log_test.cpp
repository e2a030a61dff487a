#include "asap/service/event_log.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "asap/types.hpp"

namespace asap::service {
namespace {

std::filesystem::path fresh_path(const char* name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

void write_raw(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

TEST(EventLogTest, MissingFileReadsAsEmpty) {
  EXPECT_TRUE(EventLog::read(fresh_path("asap_log_missing.jsonl")).empty());
}

TEST(EventLogTest, AppendsSurviveReopening) {
  const auto p = fresh_path("asap_log_append.jsonl");
  {
    EventLog log(p);
    log.append({{"event", "a"}, {"n", 1}});
    log.append({{"event", "b"}});
  }
  {
    EventLog log(p);
    log.append({{"event", "c"}});
  }
  const auto events = EventLog::read(p);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0]["n"], 1);
  EXPECT_EQ(events[2]["event"], "c");
  std::filesystem::remove(p);
}

TEST(EventLogTest, TornTailIsIgnoredAndRepairedOnOpen) {
  const auto p = fresh_path("asap_log_torn.jsonl");
  write_raw(p, "{\"event\":\"a\"}\n{\"event\":\"b\"}\n{\"eve");
  EXPECT_EQ(EventLog::read(p).size(), 2u);
  {
    EventLog log(p);
    log.append({{"event", "c"}});
  }
  const auto events = EventLog::read(p);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[2]["event"], "c");
  std::filesystem::remove(p);
}

TEST(EventLogTest, CorruptLineInTheMiddleThrows) {
  const auto p = fresh_path("asap_log_corrupt.jsonl");
  write_raw(p, "{\"event\":\"a\"}\nnot json\n{\"event\":\"b\"}\n");
  EXPECT_THROW(EventLog::read(p), ValidationError);
  std::filesystem::remove(p);
}

}  // namespace
}  // namespace asap::service
