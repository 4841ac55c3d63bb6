#include <stdio.h>
#include <string.h>
#include "synlex.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        enum SynlexStatus st_ = (call);                                    \
        if (st_ != SYNLEX_STATUS_OK) {                                     \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_,             \
                    synlex_last_error_message());                          \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: smoke STORE\n");
        return 2;
    }
    SynlexStore *store = NULL;
    CHECK(synlex_open(argv[1], true, &store));
    CHECK(synlex_put_flat(store, "INDEX: who\tENTRY: who\tPOS: Noun\tFRAME: Base_Noun\tFS: wh+"));
    if (synlex_put_flat(store, "INDEX: who\tENTRY: who\tPOS: Noun\tFRAME: Base_Noun\tFS: wh+")
        != SYNLEX_STATUS_DUPLICATE) {
        fprintf(stderr, "duplicate not reported\n");
        return 1;
    }
    char *text = NULL;
    CHECK(synlex_query_flat(store, "POS=Noun FS=wh+", SYNLEX_MODE_XTAG, &text));
    printf("%s", text);
    synlex_string_free(text);
    uint64_t n = 0;
    CHECK(synlex_len(store, &n));
    printf("len=%llu\n", (unsigned long long)n);
    CHECK(synlex_close(store));
    return 0;
}
