public void printUsers(SQLiteDatabase db) {
    Cursor cursor = db.query("users", null, null, null, null, null, null);
    while (cursor.moveToNext()) {
        System.out.println(cursor.getString(0));
    }
    cursor.close();
}
