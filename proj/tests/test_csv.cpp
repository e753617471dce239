#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "crowdagg/csv.hpp"
#include "crowdagg/error.hpp"

using namespace crowdagg;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("parse_csv splits header and rows") {
    CsvTable t = parse_csv("a,b,c\n1,2,3\nx,y,z\n", "mem");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"1", "2", "3"});
    CHECK(t.rows[1][2] == "z");
    CHECK(t.line_numbers[0] == 2);
    CHECK(t.line_numbers[1] == 3);
}

TEST_CASE("parse_csv tolerates a missing trailing newline and CR line ends") {
    CsvTable t = parse_csv("a,b\r\n1,2", "mem");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.header[1] == "b");
    CHECK(t.rows[0][1] == "2");
}

TEST_CASE("column lookup returns index or -1") {
    CsvTable t = parse_csv("task_id,worker_id,answer\n", "mem");
    CHECK(t.column("worker_id") == 1);
    CHECK(t.column("missing") == -1);
}

TEST_CASE("ragged rows are rejected") {
    CHECK_THROWS_AS(parse_csv("a,b\n1\n", "mem"), ParseError);
    CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n", "mem"), ParseError);
}

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(parse_csv("", "mem"), ParseError);
}

TEST_CASE("read_csv on a missing file throws") {
    CHECK_THROWS_AS(read_csv("/nonexistent/no_such_file.csv"), ParseError);
}

TEST_CASE("write_csv then read_csv round-trips") {
    std::string path = "test_csv_roundtrip.csv";
    write_csv(path, {"id", "v"}, {{"t1", "3"}, {"t2", "-0.5"}});
    CsvTable t = read_csv(path);
    CHECK(t.header == std::vector<std::string>{"id", "v"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][1] == "-0.5");
    // Exact bytes: header line plus one line per row, newline-terminated.
    CHECK(slurp(path) == "id,v\nt1,3\nt2,-0.5\n");
    std::remove(path.c_str());
}

TEST_CASE("write_csv rejects fields containing commas") {
    std::string path = "test_csv_comma.csv";
    CHECK_THROWS_AS(write_csv(path, {"a"}, {{"1,2"}}), ValidationError);
    std::remove(path.c_str());
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 4000.0, 0.0, -1.0}) {
        CHECK(parse_double(format_double(v), "ctx") == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(4000.0) == "4000");
}

TEST_CASE("parse_long accepts integers and rejects junk") {
    CHECK(parse_long("42", "ctx") == 42);
    CHECK(parse_long("-7", "ctx") == -7);
    CHECK_THROWS_AS(parse_long("4.2", "ctx"), ParseError);
    CHECK_THROWS_AS(parse_long("", "ctx"), ParseError);
    CHECK_THROWS_AS(parse_long("x9", "ctx"), ParseError);
}

TEST_CASE("parse_double accepts decimals and rejects junk") {
    CHECK(parse_double("0.25", "ctx") == 0.25);
    CHECK(parse_double("-3e2", "ctx") == -300.0);
    CHECK_THROWS_AS(parse_double("abc", "ctx"), ParseError);
    CHECK_THROWS_AS(parse_double("1.0x", "ctx"), ParseError);
}

TEST_CASE("parse errors carry the context string") {
    try {
        parse_double("bad", "myfile:7");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("myfile:7") != std::string::npos);
    }
}
