#ifndef GIOTS_H
#define GIOTS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum GiotsStatus {
  GIOTS_STATUS_OK = 0,
  // A required pointer was null.
  GIOTS_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  GIOTS_STATUS_INVALID_UTF8 = 2,
  // Input text did not parse (N-Triples, query, rule JSON).
  GIOTS_STATUS_PARSE_ERROR = 3,
  // Input parsed but was rejected, e.g. an unknown validation kind.
  GIOTS_STATUS_INVALID_ARGUMENT = 4,
  // The library panicked; the handle involved should be freed.
  GIOTS_STATUS_INTERNAL = 5,
} GiotsStatus;

// An RDF graph.
typedef struct GiotsGraph GiotsGraph;

// Validator context: reference ontology, deployed rules and witness.
typedef struct GiotsValidator GiotsValidator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on this thread.
const char *giots_last_error(void);

// Library version as a static string.
const char *giots_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void giots_string_free(char *s);

// Parses N-Triples text into a new graph.
//
// # Safety
// `ntriples` must be a NUL-terminated string; `out` must be writable.
enum GiotsStatus giots_graph_parse(const char *ntriples, struct GiotsGraph **out);

// Number of triples; 0 for a null handle.
//
// # Safety
// `graph` must be null or a live handle.
size_t giots_graph_len(const struct GiotsGraph *graph);

// Canonical N-Triples serialization of the graph.
//
// # Safety
// `graph` must be a live handle; `out` must be writable.
enum GiotsStatus giots_graph_serialize(const struct GiotsGraph *graph, char **out);

// Evaluates a SELECT or ASK query against the graph. The result is JSON:
// `{"boolean": b}` or `{"solutions": [{var: term}, ...]}`.
//
// # Safety
// `graph` must be a live handle, `query` a NUL-terminated string and
// `out` writable.
enum GiotsStatus giots_graph_query(const struct GiotsGraph *graph, const char *query, char **out);

// Releases a graph. Null is ignored.
//
// # Safety
// `graph` must come from this library and not have been freed already.
void giots_graph_free(struct GiotsGraph *graph);

// A validator with an empty reference ontology and no deployed rules.
struct GiotsValidator *giots_validator_new(void);

// Replaces the reference ontology with the given N-Triples.
//
// # Safety
// `validator` must be a live handle and `ntriples` a NUL-terminated string.
enum GiotsStatus giots_validator_set_reference(struct GiotsValidator *validator,
                                               const char *ntriples);

// Replaces the deployed rules with a JSON array of rule objects.
//
// # Safety
// `validator` must be a live handle and `rules_json` a NUL-terminated string.
enum GiotsStatus giots_validator_set_rules(struct GiotsValidator *validator,
                                           const char *rules_json);

// Validates `payload` as `kind` (ontology, annotation, rule or sparql) and
// writes the JSON report to `out`. A payload that fails validation is
// still `Ok`; read `passed` in the report.
//
// # Safety
// `validator` must be a live handle, `kind` and `payload` NUL-terminated
// strings and `out` writable.
enum GiotsStatus giots_validator_submit(const struct GiotsValidator *validator,
                                        const char *kind,
                                        const char *payload,
                                        char **out);

// Releases a validator. Null is ignored.
//
// # Safety
// `validator` must come from this library and not have been freed already.
void giots_validator_free(struct GiotsValidator *validator);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIOTS_H */
