#include <stdio.h>
#include <string.h>

#include "giots.h"

#define CHECK(cond)                                               \
    do {                                                          \
        if (!(cond)) {                                            \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                             \
        }                                                         \
    } while (0)

int main(void) {
    const char *nt = "<http://e/a> <http://e/p> \"1\" .\n";
    GiotsGraph *g = NULL;
    CHECK(giots_graph_parse(nt, &g) == GIOTS_STATUS_OK);
    CHECK(giots_graph_len(g) == 1);

    char *json = NULL;
    CHECK(giots_graph_query(g, "SELECT ?s WHERE { ?s <http://e/p> ?o }", &json) == GIOTS_STATUS_OK);
    CHECK(strstr(json, "<http://e/a>") != NULL);
    giots_string_free(json);

    CHECK(giots_graph_query(g, "ASK {", &json) == GIOTS_STATUS_PARSE_ERROR);
    CHECK(giots_last_error() != NULL);
    giots_graph_free(g);

    GiotsValidator *v = giots_validator_new();
    CHECK(giots_validator_submit(v, "sparql", "ASK { ?s ?p ?o }", &json) == GIOTS_STATUS_OK);
    CHECK(strstr(json, "\"passed\":true") != NULL);
    giots_string_free(json);
    giots_validator_free(v);

    printf("ok %s\n", giots_version());
    return 0;
}
