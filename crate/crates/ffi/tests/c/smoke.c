#include <stdio.h>
#include <string.h>

#include "entroprune.h"

int main(void) {
    const uint32_t preds[12] = {0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 0};
    const uint32_t labels[4] = {0, 1, 1, 0};
    EpEnsemble *ens = NULL;
    if (ep_ensemble_new(preds, 3, 4, labels, &ens) != EP_STATUS_OK) {
        fprintf(stderr, "new: %s\n", ep_last_error_message());
        return 1;
    }

    EpSelection *sel = NULL;
    if (ep_prune(ens, "comep", 0.5, 2, 0, &sel) != EP_STATUS_OK) {
        fprintf(stderr, "prune: %s\n", ep_last_error_message());
        return 1;
    }
    size_t idx[2];
    if (ep_selection_indices(sel, idx, 2) != EP_STATUS_OK || idx[0] != 0 || idx[1] != 1) {
        return 2;
    }
    printf("selected %zu,%zu tdas %.6f\n", idx[0], idx[1], ep_selection_tdas(sel));

    EpSelection *none = NULL;
    if (ep_prune(ens, "bogus", 0.5, 2, 0, &none) != EP_STATUS_CONFIG || none != NULL) {
        return 3;
    }
    if (strstr(ep_last_error_message(), "bogus") == NULL) {
        return 4;
    }

    ep_selection_free(sel);
    ep_ensemble_free(ens);
    printf("version %s\n", ep_version());
    return 0;
}
