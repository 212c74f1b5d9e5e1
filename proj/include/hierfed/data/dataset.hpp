#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hierfed::data {

enum class EventKind { Video, QuizResponse, Forum };
enum class ForumAction { Post = 0, Reply = 1, View = 2 };
enum class Gender { M = 0, F = 1 };
enum class Continent { AS = 0, AF = 1, EU = 2, NA = 3, SA = 4 };

struct EventRecord {
    std::string student_id;
    std::string course_id;
    EventKind kind = EventKind::Video;
    std::optional<std::string> video_id;
    std::optional<int> response;
    std::optional<ForumAction> forum_action;
    std::int64_t timestamp = 0;

    bool operator==(const EventRecord&) const = default;
};

struct StudentRecord {
    std::string student_id;
    std::string course_id;
    std::optional<Gender> gender;
    std::optional<Continent> continent;
    std::optional<int> birth_year;
    int outcome = 0;

    bool operator==(const StudentRecord&) const = default;
};

struct Student {
    StudentRecord info;
    std::vector<EventRecord> events;  // chronological, stable on ties

    bool operator==(const Student&) const = default;
};

/// Immutable after ingestion. Students are ordered by (course_id, student_id);
/// a student's position is its numeric id everywhere downstream.
struct Dataset {
    std::vector<Student> students;
    std::vector<std::string> course_ids;  // sorted, unique
    std::vector<int> course_of;           // course index per student
    std::vector<std::string> warnings;

    std::size_t size() const { return students.size(); }
    int num_courses() const { return static_cast<int>(course_ids.size()); }
    std::vector<int> students_in_course(int course) const;
    std::uint64_t content_hash() const;

    /// Equality of content; warnings are ignored.
    bool same_content(const Dataset& other) const {
        return students == other.students && course_ids == other.course_ids;
    }
};

std::string to_string(EventKind k);
std::string to_string(ForumAction a);
std::string to_string(Gender g);
std::string to_string(Continent c);
std::optional<ForumAction> parse_forum_action(const std::string& s);

/// Accepts a continent code (AS, AF, EU, NA, SA) or an ISO-3166 alpha-2
/// country code. Continent codes win where they collide with country codes.
/// Oceania and Antarctica are rejected with DataError.
Continent parse_continent(const std::string& s);

/// Reads the events and students files. Format is chosen per file: JSON-Lines
/// when the extension is .jsonl/.json or the first non-blank byte is '{',
/// CSV otherwise.
Dataset ingest(const std::filesystem::path& events, const std::filesystem::path& students);
Dataset ingest_streams(std::istream& events, std::istream& students, bool events_jsonl = false,
                       bool students_jsonl = false);

/// Builds a Dataset from records already in memory (same validation rules).
Dataset assemble(std::vector<EventRecord> events, std::vector<StudentRecord> students);

void write_events_csv(const Dataset& ds, std::ostream& out);
void write_students_csv(const Dataset& ds, std::ostream& out);
void export_csv(const Dataset& ds, const std::filesystem::path& events,
                const std::filesystem::path& students);

}  // namespace hierfed::data
