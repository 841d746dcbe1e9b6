public void hideProgress(ProgressDialog dialog) {
    if (dialog != null) {
        dialog.dismiss();
    }
}
