#include <math.h>
#include <stdio.h>

#include "bmeb.h"

int main(void) {
    const int8_t spins[6] = {1, 1, -1, 1, -1, -1};
    BmebDataset *data = NULL;
    BmebResult *result = NULL;
    BmebEstimate view;

    if (bmeb_dataset_new(3, 2, spins, &data) != BMEB_STATUS_OK) return 1;
    if (bmeb_estimate(data, &result) != BMEB_STATUS_OK) return 2;
    if (bmeb_result_get(result, &view) != BMEB_STATUS_OK) return 3;
    if (view.branch != BMEB_BRANCH_DIVERGED || !isinf(view.gamma_hat)) return 4;
    bmeb_result_free(result);
    bmeb_dataset_free(data);

    const int8_t unanimous[4] = {1, 1, 1, 1};
    if (bmeb_dataset_new(2, 2, unanimous, &data) != BMEB_STATUS_OK) return 5;
    if (bmeb_estimate(data, &result) != BMEB_STATUS_DEGENERATE_MAGNETIZATION) return 6;
    printf("%s\n", bmeb_last_error_message());
    bmeb_dataset_free(data);
    return 0;
}
